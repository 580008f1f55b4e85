//! Feeder description: buses, multi-phase lines, switch classes, devices,
//! load records and seasonal profiles, plus the structured text format they
//! are read from.
//!
//! ```text
//! [base]
//! s_base_mva = 1.0
//! v_base_kv = 4.16
//!
//! [buses]
//! # id, phases
//! 1, abc
//!
//! [lines]
//! # id, from, to, phases, class, r(9 row-major), x(9), p_max(3), q_max(3)
//! L1, 1, 2, abc, LN, 0.01, 0, 0, 0, 0.01, 0, 0, 0, 0.01, ...
//!
//! [devices]
//! tg, <bus>, <s_max>
//! bess, <id>, <bus>, <s_nom>, <e_nom>, <soc_init>, <soc_min>, <soc_max>[, <f_set>]
//! pv, <id>, <bus>, <s_nom>, <pf>
//!
//! [loads]
//! <bus>, CL|NL, p_a, p_b, p_c, pf
//!
//! [profiles]
//! load|pv, spring|summer|fall|winter, 24 hourly per-unit values
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FeederError, ParseError};

/// Bus index into [`Feeder::buses`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BusIdx(pub usize);

/// Line index into [`Feeder::lines`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineIdx(pub usize);

/// Subset of the three phases `a`, `b`, `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);
    pub const EMPTY: PhaseSet = PhaseSet(0);

    pub fn single(phase: usize) -> Self {
        assert!(phase < 3);
        PhaseSet(1 << phase)
    }

    pub fn contains(self, phase: usize) -> bool {
        phase < 3 && self.0 & (1 << phase) != 0
    }

    pub fn is_subset(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Phase indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..3).filter(move |&n| self.contains(n))
    }
}

impl FromStr for PhaseSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = 0u8;
        for ch in s.trim().chars() {
            let bit = match ch.to_ascii_lowercase() {
                'a' => 1,
                'b' => 2,
                'c' => 4,
                other => return Err(format!("unknown phase '{other}'")),
            };
            if bits & bit != 0 {
                return Err(format!("phase '{ch}' repeated"));
            }
            bits |= bit;
        }
        if bits == 0 {
            return Err("empty phase set".into());
        }
        Ok(PhaseSet(bits))
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in self.iter() {
            write!(f, "{}", ['a', 'b', 'c'][n])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineClass {
    /// Non-switchable line.
    Ln,
    /// Energizing switch.
    Esw,
    /// Synchronizing switch.
    Ssw,
}

impl LineClass {
    pub fn is_switchable(self) -> bool {
        !matches!(self, LineClass::Ln)
    }
}

impl FromStr for LineClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LN" => Ok(LineClass::Ln),
            "ESW" => Ok(LineClass::Esw),
            "SSW" => Ok(LineClass::Ssw),
            other => Err(format!("unknown line class '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoadClass {
    /// Critical load, restored together with its block.
    Cl,
    /// Non-critical load, picked up by a separate decision.
    Nl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Fall, Season::Winter];

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
            Season::Winter => "winter",
        }
    }
}

impl FromStr for Season {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "fall" | "autumn" => Ok(Season::Fall),
            "winter" => Ok(Season::Winter),
            other => Err(format!("unknown season '{other}'")),
        }
    }
}

pub type Matrix3 = [[f64; 3]; 3];
pub type PhaseVec = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Base {
    pub s_base_mva: f64,
    pub v_base_kv: f64,
}

impl Default for Base {
    fn default() -> Self {
        Base { s_base_mva: 1.0, v_base_kv: 4.16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub phases: PhaseSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from: BusIdx,
    pub to: BusIdx,
    pub phases: PhaseSet,
    pub class: LineClass,
    /// Resistance-related matrix in per-unit, zero outside `phases`.
    pub r: Matrix3,
    /// Reactance-related matrix in per-unit, zero outside `phases`.
    pub x: Matrix3,
    pub p_max: PhaseVec,
    pub q_max: PhaseVec,
}

impl Line {
    pub fn other_end(&self, bus: BusIdx) -> BusIdx {
        if bus == self.from {
            self.to
        } else {
            self.from
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgDevice {
    pub bus: BusIdx,
    /// Rated apparent power in per-unit.
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessDevice {
    pub id: String,
    pub bus: BusIdx,
    pub s_nom: f64,
    /// Energy capacity in per-unit hours.
    pub e_nom: f64,
    pub soc_init: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// No-load frequency setpoint of the grid-forming inverter in Hz.
    pub f_set: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvDevice {
    pub id: String,
    pub bus: BusIdx,
    pub s_nom: f64,
    pub pf_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRecord {
    pub bus: BusIdx,
    pub class: LoadClass,
    /// Nominal per-phase active demand at profile value 1.0.
    pub p_nom: PhaseVec,
    pub pf_angle: f64,
}

impl LoadRecord {
    pub fn tan_phi(&self) -> f64 {
        self.pf_angle.tan()
    }
}

/// Seasonal 24-hour per-unit curves for load demand and normalized PV output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub load: BTreeMap<Season, [f64; 24]>,
    pub pv: BTreeMap<Season, [f64; 24]>,
}

impl Profiles {
    fn sample(curve: &[f64; 24], hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0);
        let lo = h.floor() as usize % 24;
        let hi = (lo + 1) % 24;
        let w = h - h.floor();
        curve[lo] * (1.0 - w) + curve[hi] * w
    }

    /// Load multiplier at a fractional hour of day, linearly interpolated.
    pub fn load_at(&self, season: Season, hour: f64) -> Option<f64> {
        self.load.get(&season).map(|c| Self::sample(c, hour))
    }

    /// Normalized PV output at a fractional hour of day.
    pub fn pv_at(&self, season: Season, hour: f64) -> Option<f64> {
        self.pv.get(&season).map(|c| Self::sample(c, hour))
    }
}

/// Validated feeder. Buses are sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feeder {
    pub base: Base,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub tg: Option<TgDevice>,
    pub bess: Vec<BessDevice>,
    pub pv: Vec<PvDevice>,
    pub loads: Vec<LoadRecord>,
    pub profiles: Profiles,
    /// SHA-256 of the source document, hex encoded.
    pub source_hash: String,
}

impl Feeder {
    pub fn bus_by_id(&self, id: u32) -> Option<BusIdx> {
        self.buses.binary_search_by_key(&id, |b| b.id).ok().map(BusIdx)
    }

    pub fn bus(&self, idx: BusIdx) -> &Bus {
        &self.buses[idx.0]
    }

    pub fn line(&self, idx: LineIdx) -> &Line {
        &self.lines[idx.0]
    }

    pub fn line_indices(&self) -> impl Iterator<Item = LineIdx> {
        (0..self.lines.len()).map(LineIdx)
    }

    pub fn lines_of_class(&self, class: LineClass) -> impl Iterator<Item = LineIdx> + '_ {
        self.lines.iter().enumerate().filter(move |(_, l)| l.class == class).map(|(i, _)| LineIdx(i))
    }

    /// Buses carrying at least one load record of `class`.
    pub fn load_buses(&self, class: LoadClass) -> Vec<BusIdx> {
        let set: BTreeSet<BusIdx> = self.loads.iter().filter(|l| l.class == class).map(|l| l.bus).collect();
        set.into_iter().collect()
    }

    /// Incident line indices per bus.
    pub fn incidence(&self) -> Vec<Vec<LineIdx>> {
        let mut inc = vec![Vec::new(); self.buses.len()];
        for (i, l) in self.lines.iter().enumerate() {
            inc[l.from.0].push(LineIdx(i));
            inc[l.to.0].push(LineIdx(i));
        }
        inc
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Feeder, FeederError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FeederError::Io { path: path.display().to_string(), source: e })?;
        load_feeder(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Base,
    Buses,
    Lines,
    Devices,
    Loads,
    Profiles,
}

struct Record<'a> {
    line: usize,
    fields: Vec<&'a str>,
}

impl<'a> Record<'a> {
    fn err(&self, field: impl Into<String>, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, field: field.into(), message: message.into() }
    }

    fn float(&self, i: usize, name: &str) -> Result<f64, ParseError> {
        let raw = self.fields.get(i).ok_or_else(|| self.err(name, "missing field"))?;
        let v: f64 = raw.parse().map_err(|_| self.err(name, format!("not a number: '{raw}'")))?;
        if !v.is_finite() {
            return Err(self.err(name, "non-finite value"));
        }
        Ok(v)
    }

    fn floats<const N: usize>(&self, start: usize, name: &str) -> Result<[f64; N], ParseError> {
        let mut out = [0.0; N];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.float(start + k, &format!("{name}[{k}]"))?;
        }
        Ok(out)
    }

    fn uint(&self, i: usize, name: &str) -> Result<u32, ParseError> {
        let raw = self.fields.get(i).ok_or_else(|| self.err(name, "missing field"))?;
        raw.parse().map_err(|_| self.err(name, format!("not a bus id: '{raw}'")))
    }

    fn text(&self, i: usize, name: &str) -> Result<&'a str, ParseError> {
        self.fields.get(i).copied().ok_or_else(|| self.err(name, "missing field"))
    }

    fn expect_len(&self, min: usize, max: usize) -> Result<(), ParseError> {
        let n = self.fields.len();
        if n < min || n > max {
            let want = if min == max { format!("{min}") } else { format!("{min}..={max}") };
            return Err(self.err("record", format!("expected {want} fields, found {n}")));
        }
        Ok(())
    }
}

fn pf_to_angle(pf: f64) -> Option<f64> {
    (pf > 0.0 && pf <= 1.0).then(|| pf.acos())
}

struct RawLine {
    rec_line: usize,
    id: String,
    from: u32,
    to: u32,
    phases: PhaseSet,
    class: LineClass,
    r: Matrix3,
    x: Matrix3,
    p_max: PhaseVec,
    q_max: PhaseVec,
}

/// Parse and validate a feeder document.
pub fn load_feeder(text: &str) -> Result<Feeder, FeederError> {
    let mut section = Section::None;
    let mut base = Base::default();
    let mut buses: Vec<Bus> = Vec::new();
    let mut raw_lines: Vec<RawLine> = Vec::new();
    let mut raw_tg: Option<(usize, u32, f64)> = None;
    let mut raw_bess = Vec::new();
    let mut raw_pv = Vec::new();
    let mut raw_loads = Vec::new();
    let mut profiles = Profiles::default();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            section = match content.trim_matches(|c| c == '[' || c == ']').trim() {
                "base" => Section::Base,
                "buses" => Section::Buses,
                "lines" => Section::Lines,
                "devices" => Section::Devices,
                "loads" => Section::Loads,
                "profiles" => Section::Profiles,
                other => {
                    return Err(ParseError { line: line_no, field: "section".into(), message: format!("unknown section '{other}'") }.into())
                }
            };
            continue;
        }
        if section == Section::Base {
            let (key, value) = content.split_once('=').ok_or_else(|| ParseError {
                line: line_no,
                field: "base".into(),
                message: "expected 'key = value'".into(),
            })?;
            let v: f64 = value.trim().parse().map_err(|_| ParseError {
                line: line_no,
                field: key.trim().into(),
                message: format!("not a number: '{}'", value.trim()),
            })?;
            match key.trim() {
                "s_base_mva" => base.s_base_mva = v,
                "v_base_kv" => base.v_base_kv = v,
                other => {
                    return Err(ParseError { line: line_no, field: other.into(), message: "unknown base key".into() }.into())
                }
            }
            continue;
        }
        let rec = Record { line: line_no, fields: content.split(',').map(str::trim).collect() };
        match section {
            Section::None => return Err(rec.err("section", "record outside of any section").into()),
            Section::Base => unreachable!(),
            Section::Buses => {
                rec.expect_len(2, 2)?;
                let id = rec.uint(0, "id")?;
                let phases = rec.text(1, "phases")?.parse::<PhaseSet>().map_err(|m| rec.err("phases", m))?;
                buses.push(Bus { id, phases });
            }
            Section::Lines => {
                rec.expect_len(29, 29)?;
                let r9: [f64; 9] = rec.floats(5, "r_matrix")?;
                let x9: [f64; 9] = rec.floats(14, "x_matrix")?;
                let to_m = |v: [f64; 9]| [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]];
                raw_lines.push(RawLine {
                    rec_line: line_no,
                    id: rec.text(0, "id")?.to_string(),
                    from: rec.uint(1, "from")?,
                    to: rec.uint(2, "to")?,
                    phases: rec.text(3, "phases")?.parse().map_err(|m| rec.err("phases", m))?,
                    class: rec.text(4, "class")?.parse().map_err(|m| rec.err("class", m))?,
                    r: to_m(r9),
                    x: to_m(x9),
                    p_max: rec.floats(23, "p_max")?,
                    q_max: rec.floats(26, "q_max")?,
                });
            }
            Section::Devices => {
                let kind = rec.text(0, "kind")?.to_ascii_lowercase();
                match kind.as_str() {
                    "tg" => {
                        rec.expect_len(3, 3)?;
                        if raw_tg.is_some() {
                            return Err(rec.err("tg", "more than one TG attachment").into());
                        }
                        raw_tg = Some((line_no, rec.uint(1, "bus")?, rec.float(2, "s_max")?));
                    }
                    "bess" => {
                        rec.expect_len(8, 9)?;
                        let f_set = if rec.fields.len() == 9 { rec.float(8, "f_set")? } else { 60.0 };
                        raw_bess.push((
                            line_no,
                            rec.text(1, "id")?.to_string(),
                            rec.uint(2, "bus")?,
                            [rec.float(3, "s_nom")?, rec.float(4, "e_nom")?, rec.float(5, "soc_init")?, rec.float(6, "soc_min")?, rec.float(7, "soc_max")?, f_set],
                        ));
                    }
                    "pv" => {
                        rec.expect_len(5, 5)?;
                        let pf = rec.float(4, "pf")?;
                        let angle = pf_to_angle(pf).ok_or_else(|| rec.err("pf", "power factor must be in (0, 1]"))?;
                        raw_pv.push((line_no, rec.text(1, "id")?.to_string(), rec.uint(2, "bus")?, rec.float(3, "s_nom")?, angle));
                    }
                    other => return Err(rec.err("kind", format!("unknown device kind '{other}'")).into()),
                }
            }
            Section::Loads => {
                rec.expect_len(6, 6)?;
                let class = match rec.text(1, "class")?.to_ascii_uppercase().as_str() {
                    "CL" => LoadClass::Cl,
                    "NL" => LoadClass::Nl,
                    other => return Err(rec.err("class", format!("unknown load class '{other}'")).into()),
                };
                let pf = rec.float(5, "pf")?;
                let angle = pf_to_angle(pf).ok_or_else(|| rec.err("pf", "power factor must be in (0, 1]"))?;
                raw_loads.push((line_no, rec.uint(0, "bus")?, class, rec.floats::<3>(2, "p")?, angle));
            }
            Section::Profiles => {
                rec.expect_len(26, 26)?;
                let season: Season = rec.text(1, "season")?.parse().map_err(|m| rec.err("season", m))?;
                let curve: [f64; 24] = rec.floats(2, "values")?;
                match rec.text(0, "kind")?.to_ascii_lowercase().as_str() {
                    "load" => profiles.load.insert(season, curve),
                    "pv" => profiles.pv.insert(season, curve),
                    other => return Err(rec.err("kind", format!("unknown profile kind '{other}'")).into()),
                };
            }
        }
    }

    buses.sort_by_key(|b| b.id);
    for w in buses.windows(2) {
        if w[0].id == w[1].id {
            return Err(FeederError::Invalid(format!("bus {} declared twice", w[0].id)));
        }
    }
    let lookup = |id: u32, line: usize, field: &str| -> Result<BusIdx, FeederError> {
        buses
            .binary_search_by_key(&id, |b| b.id)
            .map(BusIdx)
            .map_err(|_| ParseError { line, field: field.into(), message: format!("unknown bus {id}") }.into())
    };

    let mut lines = Vec::with_capacity(raw_lines.len());
    let mut seen_ids = BTreeSet::new();
    for rl in raw_lines {
        if !seen_ids.insert(rl.id.clone()) {
            return Err(FeederError::Invalid(format!("line id '{}' declared twice", rl.id)));
        }
        let from = lookup(rl.from, rl.rec_line, "from")?;
        let to = lookup(rl.to, rl.rec_line, "to")?;
        if from == to {
            return Err(FeederError::Invalid(format!("line '{}' is a self-loop", rl.id)));
        }
        for end in [from, to] {
            if !rl.phases.is_subset(buses[end.0].phases) {
                return Err(FeederError::Invalid(format!(
                    "line '{}' phases {} not carried by bus {} ({})",
                    rl.id, rl.phases, buses[end.0].id, buses[end.0].phases
                )));
            }
        }
        for (name, m) in [("r", &rl.r), ("x", &rl.x)] {
            for i in 0..3 {
                for j in 0..3 {
                    if (m[i][j] - m[j][i]).abs() > 1e-12 {
                        return Err(FeederError::Invalid(format!("line '{}' {name} matrix is not symmetric", rl.id)));
                    }
                    if (!rl.phases.contains(i) || !rl.phases.contains(j)) && m[i][j] != 0.0 {
                        return Err(FeederError::Invalid(format!(
                            "line '{}' {name} matrix has entries outside its phases {}",
                            rl.id, rl.phases
                        )));
                    }
                }
            }
        }
        if rl.p_max.iter().chain(rl.q_max.iter()).any(|v| *v < 0.0) {
            return Err(FeederError::Invalid(format!("line '{}' has negative flow limits", rl.id)));
        }
        lines.push(Line {
            id: rl.id,
            from,
            to,
            phases: rl.phases,
            class: rl.class,
            r: rl.r,
            x: rl.x,
            p_max: rl.p_max,
            q_max: rl.q_max,
        });
    }

    let mut device_buses: BTreeSet<BusIdx> = BTreeSet::new();
    let tg = match raw_tg {
        Some((line, bus, s_max)) => {
            let bus = lookup(bus, line, "bus")?;
            if s_max <= 0.0 {
                return Err(FeederError::Invalid("TG rating must be positive".into()));
            }
            if buses[bus.0].phases != PhaseSet::ABC {
                return Err(FeederError::Invalid("TG bus must be three-phase".into()));
            }
            device_buses.insert(bus);
            Some(TgDevice { bus, s_max })
        }
        None => None,
    };
    let mut bess = Vec::new();
    for (line, id, bus, [s_nom, e_nom, soc_init, soc_min, soc_max, f_set]) in raw_bess {
        let bus = lookup(bus, line, "bus")?;
        if !device_buses.insert(bus) {
            return Err(FeederError::Invalid(format!("BESS '{id}' shares bus {} with another source", buses[bus.0].id)));
        }
        if buses[bus.0].phases != PhaseSet::ABC {
            return Err(FeederError::Invalid(format!("BESS '{id}' bus must be three-phase")));
        }
        if s_nom <= 0.0 || e_nom <= 0.0 {
            return Err(FeederError::Invalid(format!("BESS '{id}' needs positive ratings")));
        }
        if !(0.0 <= soc_min && soc_min <= soc_init && soc_init <= soc_max && soc_max <= 1.0) {
            return Err(FeederError::Invalid(format!("BESS '{id}' SoC bounds are not ordered")));
        }
        bess.push(BessDevice { id, bus, s_nom, e_nom, soc_init, soc_min, soc_max, f_set });
    }
    let mut pv = Vec::new();
    let mut pv_buses = BTreeSet::new();
    for (line, id, bus, s_nom, pf_angle) in raw_pv {
        let bus = lookup(bus, line, "bus")?;
        if !pv_buses.insert(bus) {
            return Err(FeederError::Invalid(format!("PV '{id}' shares a bus with another PV unit")));
        }
        pv.push(PvDevice { id, bus, s_nom, pf_angle });
    }
    let mut loads = Vec::new();
    for (line, bus, class, p_nom, pf_angle) in raw_loads {
        let bus = lookup(bus, line, "bus")?;
        for (n, p) in p_nom.iter().enumerate() {
            if *p != 0.0 && !buses[bus.0].phases.contains(n) {
                return Err(FeederError::Invalid(format!("load at bus {} uses a phase the bus lacks", buses[bus.0].id)));
            }
            if *p < 0.0 {
                return Err(FeederError::Invalid(format!("negative load at bus {}", buses[bus.0].id)));
            }
        }
        loads.push(LoadRecord { bus, class, p_nom, pf_angle });
    }

    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let source_hash = hex::encode(hasher.finalize());

    let feeder = Feeder { base, buses, lines, tg, bess, pv, loads, profiles, source_hash };
    // Block-level invariants (switchable lines inside one block, one BESS per
    // block) need the partition.
    crate::topology::partition::check_block_invariants(&feeder)?;
    Ok(feeder)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_bus() -> &'static str {
        "[buses]\n1, abc\n2, abc\n[lines]\nL1, 1, 2, abc, LN, 0.01,0,0,0,0.01,0,0,0,0.01, 0.02,0,0,0,0.02,0,0,0,0.02, 1,1,1, 1,1,1\n"
    }

    #[test]
    fn smallest_valid_feeder() {
        let f = load_feeder(two_bus()).unwrap();
        assert_eq!(f.buses.len(), 2);
        assert_eq!(f.lines.len(), 1);
        assert_eq!(f.lines[0].class, LineClass::Ln);
        assert_eq!(f.source_hash.len(), 64);
    }

    #[test]
    fn phase_set_parsing() {
        let p: PhaseSet = "ac".parse().unwrap();
        assert!(p.contains(0) && !p.contains(1) && p.contains(2));
        assert_eq!(p.to_string(), "ac");
        assert!("aa".parse::<PhaseSet>().is_err());
        assert!("d".parse::<PhaseSet>().is_err());
    }

    #[test]
    fn parse_error_carries_location() {
        let doc = "[buses]\n1, abc\n2, abc\n[lines]\nL1, 1, 2, abc, LN, x\n";
        match load_feeder(doc) {
            Err(FeederError::Parse(e)) => {
                assert_eq!(e.line, 5);
                assert_eq!(e.field, "record");
            }
            other => panic!("unexpected {other:?}"),
        }
        let doc = "[buses]\n1, abc\n2, abq\n";
        match load_feeder(doc) {
            Err(FeederError::Parse(e)) => {
                assert_eq!(e.line, 3);
                assert_eq!(e.field, "phases");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn line_phase_must_be_on_both_buses() {
        let doc = "[buses]\n1, abc\n2, a\n[lines]\nL1, 1, 2, ab, LN, 0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0, 1,1,1, 1,1,1\n";
        assert!(matches!(load_feeder(doc), Err(FeederError::Invalid(_))));
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let doc = "[buses]\n1, abc\n2, abc\n[lines]\nL1, 1, 2, abc, LN, 0,1,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0, 1,1,1, 1,1,1\n";
        assert!(matches!(load_feeder(doc), Err(FeederError::Invalid(_))));
    }

    #[test]
    fn unknown_bus_reference() {
        let doc = "[buses]\n1, abc\n[lines]\nL1, 1, 9, abc, LN, 0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0, 1,1,1, 1,1,1\n";
        match load_feeder(doc) {
            Err(FeederError::Parse(e)) => assert_eq!(e.field, "to"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn profile_interpolation() {
        let mut p = Profiles::default();
        let mut c = [0.0; 24];
        c[3] = 1.0;
        c[4] = 3.0;
        p.load.insert(Season::Winter, c);
        assert_eq!(p.load_at(Season::Winter, 3.0), Some(1.0));
        assert_eq!(p.load_at(Season::Winter, 3.5), Some(2.0));
        assert_eq!(p.load_at(Season::Summer, 3.5), None);
    }
}
