//! Scenario files: `key = value` lines in the ONE settings dialect.
//!
//! `GroupN.key` falls back to `Group.key`. Repeated keys accumulate (used by
//! `GroupN.nodeLocation`); single-valued lookups take the last occurrence.
//! Numbers accept `k` / `M` / `G` suffixes (×10³ / ×10⁶ / ×10⁹), ranges are
//! `lo,hi`.

use std::collections::BTreeSet;
use std::ops::Range;
use std::path::{Path, PathBuf};

use log::warn;
use thiserror::Error;

use crate::map::Point;
use crate::mobility::{SpeedRange, WaitRange};
use crate::radio::{InterfaceKind, InterfaceSpec};
use crate::routing::ProphetParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("{origin}: bad value for `{key}`: {msg}")]
    Value { origin: String, key: String, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    /// 0 for command-line overrides.
    line: usize,
}

/// Raw ordered key/value settings.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    entries: Vec<Entry>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = k.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("invalid key `{key}`"),
                });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: v.trim().to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    /// Replaces every occurrence of `key` with a single `value`.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.retain(|e| e.key != key);
        self.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: 0,
        });
    }

    fn last(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.last(key).map(|e| e.value.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.key == key)
            .map(|e| e.value.as_str())
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.key.as_str())
    }

    fn typed<T>(&self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.last(key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|msg| ConfigError::Value {
                origin: if e.line == 0 {
                    "override".into()
                } else {
                    format!("line {}", e.line)
                },
                key: key.to_string(),
                msg,
            }),
        }
    }

    fn required<T>(&self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        self.typed(key, f)?
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// `GroupN.key`, else `Group.key`; returns the key actually used.
    fn group_key(&self, group: usize, key: &str) -> String {
        let specific = format!("Group{group}.{key}");
        if self.last(&specific).is_some() {
            specific
        } else {
            format!("Group.{key}")
        }
    }
}

/// Number with optional `k`/`M`/`G` suffix.
pub fn parse_quantity(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (num, mult) = match s.chars().last() {
        Some('k') => (&s[..s.len() - 1], 1e3),
        Some('M') => (&s[..s.len() - 1], 1e6),
        Some('G') => (&s[..s.len() - 1], 1e9),
        _ => (s, 1.0),
    };
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v * mult)
}

fn parse_bytes(s: &str) -> Result<u64, String> {
    let v = parse_quantity(s)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(format!("`{s}` is not a whole number of bytes"));
    }
    Ok(v as u64)
}

/// `lo,hi`; a single value means `lo = hi`.
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [one] => {
            let v = parse_quantity(one)?;
            Ok((v, v))
        }
        [a, b] => Ok((parse_quantity(a)?, parse_quantity(b)?)),
        _ => Err(format!("expected `lo,hi`, got `{s}`")),
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn parse_id_range(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = parse_pair(s)?;
    if a < 0.0 || b < a || a.fract() != 0.0 || b.fract() != 0.0 {
        return Err(format!("`{s}` is not an id range lo,hi with 0 <= lo <= hi"));
    }
    Ok(a as usize..b as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupConfig {
    pub name: String,
    pub count: usize,
    /// First node id of the group; ids are contiguous in declaration order.
    pub first_id: usize,
    pub movement: String,
    pub speed: Option<SpeedRange>,
    pub wait: Option<WaitRange>,
    /// Bytes.
    pub buffer_size: u64,
    /// Minutes.
    pub msg_ttl: Option<f64>,
    pub interfaces: Vec<InterfaceKind>,
    pub router: String,
    pub locations: Vec<Point>,
}

impl GroupConfig {
    pub fn ids(&self) -> Range<usize> {
        self.first_id..self.first_id + self.count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventGeneratorConfig {
    pub name: String,
    /// Seconds between creations.
    pub interval: (f64, f64),
    /// Bytes, inclusive.
    pub size: (u64, u64),
    pub hosts: Range<usize>,
    pub to_hosts: Range<usize>,
    pub prefix: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub end_time: f64,
    pub update_interval: f64,
    pub rng_seed: u64,
    pub map_file: PathBuf,
    pub interfaces: Vec<InterfaceSpec>,
    pub groups: Vec<GroupConfig>,
    pub events: Vec<EventGeneratorConfig>,
    pub prophet: ProphetParams,
    pub report_dir: PathBuf,
    /// Unknown keys and similar non-fatal findings.
    pub warnings: Vec<String>,
    /// Settings after overrides; re-serialisable for provenance.
    pub settings: Settings,
}

impl ScenarioConfig {
    pub fn node_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// Group owning `node`.
    pub fn group_of(&self, node: usize) -> Option<&GroupConfig> {
        self.groups.iter().find(|g| g.ids().contains(&node))
    }

    /// Points every group at `router`.
    pub fn set_router(&mut self, router: &str) {
        for g in &mut self.groups {
            g.router = router.to_string();
        }
    }

    pub fn from_settings(settings: Settings, base_dir: &Path) -> Result<Self, ConfigError> {
        let s = &settings;
        let name = s.get("Scenario.name").unwrap_or("scenario").to_string();
        let end_time = s.required("Scenario.endTime", parse_quantity)?;
        let update_interval = s.required("Scenario.updateInterval", parse_quantity)?;
        if !(end_time > 0.0) {
            return Err(ConfigError::Invalid(format!("Scenario.endTime must be > 0, got {end_time}")));
        }
        if !(update_interval > 0.0 && update_interval <= end_time) {
            return Err(ConfigError::Invalid(format!(
                "Scenario.updateInterval must be in (0, endTime], got {update_interval}"
            )));
        }
        let rng_seed = s
            .typed("MovementModel.rngSeed", |v| {
                v.trim().parse::<u64>().map_err(|_| format!("`{v}` is not a non-negative integer"))
            })?
            .unwrap_or(0);

        let n_maps = s.typed("MapBasedMovement.nrofMapFiles", parse_count)?.unwrap_or(1);
        if n_maps != 1 {
            return Err(ConfigError::Invalid(format!(
                "exactly one map file is supported, MapBasedMovement.nrofMapFiles = {n_maps}"
            )));
        }
        let map_rel = s.required("MapBasedMovement.mapFile1", |v| Ok(PathBuf::from(v)))?;
        let map_file = if map_rel.is_absolute() {
            map_rel
        } else {
            base_dir.join(map_rel)
        };

        let n_groups = s.required("Scenario.nrofHostGroups", parse_count)?;
        if n_groups == 0 {
            return Err(ConfigError::Invalid("Scenario.nrofHostGroups must be >= 1".into()));
        }

        let mut interfaces: Vec<InterfaceSpec> = Vec::new();
        let mut groups = Vec::with_capacity(n_groups);
        let mut next_id = 0;
        for gi in 1..=n_groups {
            let gname = format!("Group{gi}");
            let key = |k: &str| s.group_key(gi, k);
            let count = s.required(&key("nrofHosts"), parse_count)?;
            if count == 0 {
                return Err(ConfigError::Invalid(format!("{gname}.nrofHosts must be > 0")));
            }
            let movement = s.required(&key("movementModel"), |v| Ok(v.to_string()))?;
            let speed = s
                .typed(&key("speed"), parse_pair)?
                .map(|(a, b)| SpeedRange::new(a, b))
                .transpose()
                .map_err(|e| ConfigError::Invalid(format!("{gname}: {e}")))?;
            let wait = s
                .typed(&key("waitTime"), parse_pair)?
                .map(|(a, b)| WaitRange::new(a, b))
                .transpose()
                .map_err(|e| ConfigError::Invalid(format!("{gname}: {e}")))?;
            let buffer_size = s.required(&key("bufferSize"), parse_bytes)?;
            let msg_ttl = s.typed(&key("msgTtl"), parse_quantity)?;
            if let Some(ttl) = msg_ttl {
                if !(ttl > 0.0) {
                    return Err(ConfigError::Invalid(format!("{gname}.msgTtl must be > 0")));
                }
            }
            let router = s.required(&key("router"), |v| Ok(v.to_string()))?;

            let n_if = s.typed(&key("nrofInterfaces"), parse_count)?.unwrap_or(1);
            let mut kinds = Vec::with_capacity(n_if);
            for ii in 1..=n_if {
                let iname = s.required(&key(&format!("interface{ii}")), |v| Ok(v.to_string()))?;
                let kind = match interfaces.iter().position(|i| i.name == iname) {
                    Some(k) => k,
                    None => {
                        let spec = InterfaceSpec {
                            transmit_speed: s.required(&format!("{iname}.transmitSpeed"), parse_quantity)?,
                            transmit_range: s.required(&format!("{iname}.transmitRange"), parse_quantity)?,
                            name: iname.clone(),
                        };
                        if !(spec.transmit_speed > 0.0 && spec.transmit_range > 0.0) {
                            return Err(ConfigError::Invalid(format!(
                                "{iname}: transmitSpeed and transmitRange must be > 0"
                            )));
                        }
                        interfaces.push(spec);
                        interfaces.len() - 1
                    }
                };
                if !kinds.contains(&kind) {
                    kinds.push(kind);
                }
            }

            let loc_key = key("nodeLocation");
            let mut locations = Vec::new();
            for v in s.get_all(&loc_key) {
                let (x, y) = parse_pair(v).map_err(|msg| ConfigError::Value {
                    origin: "scenario".into(),
                    key: loc_key.clone(),
                    msg,
                })?;
                locations.push(Point::new(x, y));
            }
            if movement == "StationaryMovement" && locations.len() != count {
                return Err(ConfigError::Invalid(format!(
                    "{gname} is stationary with {count} hosts but has {} nodeLocation entries",
                    locations.len()
                )));
            }

            groups.push(GroupConfig {
                name: gname,
                count,
                first_id: next_id,
                movement,
                speed,
                wait,
                buffer_size,
                msg_ttl,
                interfaces: kinds,
                router,
                locations,
            });
            next_id += count;
        }

        let n_events = s.typed("Events.nrof", parse_count)?.unwrap_or(0);
        let mut events = Vec::with_capacity(n_events);
        for ei in 1..=n_events {
            let p = format!("Events{ei}");
            let class = s.get(&format!("{p}.class")).unwrap_or("MessageEventGenerator");
            if class != "MessageEventGenerator" {
                return Err(ConfigError::Invalid(format!("{p}.class `{class}` is not supported")));
            }
            let interval = s.required(&format!("{p}.interval"), parse_pair)?;
            let (smin, smax) = s.required(&format!("{p}.size"), |v| {
                let (a, b) = parse_pair(v)?;
                Ok((parse_bytes(&a.to_string())?, parse_bytes(&b.to_string())?))
            })?;
            let hosts = s.required(&format!("{p}.hosts"), parse_id_range)?;
            let to_hosts = s.required(&format!("{p}.tohosts"), parse_id_range)?;
            let prefix = s.get(&format!("{p}.prefix")).unwrap_or("M").to_string();
            if !(interval.0 > 0.0 && interval.0 <= interval.1) {
                return Err(ConfigError::Invalid(format!("{p}.interval must satisfy 0 < lo <= hi")));
            }
            if !(smin > 0 && smin <= smax) {
                return Err(ConfigError::Invalid(format!("{p}.size must satisfy 0 < lo <= hi")));
            }
            if hosts.is_empty() || to_hosts.is_empty() {
                return Err(ConfigError::Invalid(format!("{p}: host ranges must be non-empty")));
            }
            if hosts.start < to_hosts.end && to_hosts.start < hosts.end {
                return Err(ConfigError::Invalid(format!(
                    "{p}: hosts {hosts:?} and tohosts {to_hosts:?} overlap"
                )));
            }
            if hosts.end > next_id || to_hosts.end > next_id {
                return Err(ConfigError::Invalid(format!(
                    "{p}: host ranges exceed the {next_id} configured nodes"
                )));
            }
            events.push(EventGeneratorConfig {
                name: p,
                interval,
                size: (smin, smax),
                hosts,
                to_hosts,
                prefix,
            });
        }

        let d = ProphetParams::default();
        let prophet = ProphetParams {
            p_init: s.typed("ProphetRouter.pInit", parse_quantity)?.unwrap_or(d.p_init),
            beta: s.typed("ProphetRouter.beta", parse_quantity)?.unwrap_or(d.beta),
            gamma: s.typed("ProphetRouter.gamma", parse_quantity)?.unwrap_or(d.gamma),
            seconds_in_time_unit: s
                .typed("ProphetRouter.secondsInTimeUnit", parse_quantity)?
                .unwrap_or(d.seconds_in_time_unit),
        };
        prophet
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let report_dir = PathBuf::from(s.get("Report.outputDir").unwrap_or("reports"));

        let warnings = unknown_keys(s, n_groups, n_events, &interfaces)
            .into_iter()
            .map(|k| format!("unknown key `{k}` ignored"))
            .collect::<Vec<_>>();
        for w in &warnings {
            warn!("{w}");
        }

        Ok(Self {
            name,
            end_time,
            update_interval,
            rng_seed,
            map_file,
            interfaces,
            groups,
            events,
            prophet,
            report_dir,
            warnings,
            settings,
        })
    }
}

fn unknown_keys(s: &Settings, n_groups: usize, n_events: usize, interfaces: &[InterfaceSpec]) -> BTreeSet<String> {
    const FIXED: &[&str] = &[
        "Scenario.name",
        "Scenario.endTime",
        "Scenario.updateInterval",
        "Scenario.nrofHostGroups",
        "Scenario.simulateConnections",
        "MovementModel.rngSeed",
        "MovementModel.worldSize",
        "MapBasedMovement.nrofMapFiles",
        "MapBasedMovement.mapFile1",
        "Events.nrof",
        "ProphetRouter.secondsInTimeUnit",
        "ProphetRouter.pInit",
        "ProphetRouter.beta",
        "ProphetRouter.gamma",
        "Report.outputDir",
    ];
    const GROUP: &[&str] = &[
        "groupID",
        "nrofHosts",
        "movementModel",
        "speed",
        "waitTime",
        "bufferSize",
        "msgTtl",
        "nrofInterfaces",
        "router",
        "nodeLocation",
    ];
    const EVENT: &[&str] = &["class", "interval", "size", "hosts", "tohosts", "prefix"];
    const IFACE: &[&str] = &["type", "transmitSpeed", "transmitRange"];

    let known = |key: &str| -> bool {
        if FIXED.contains(&key) {
            return true;
        }
        let Some((ns, field)) = key.split_once('.') else {
            return false;
        };
        if let Some(g) = ns.strip_prefix("Group") {
            let group_ok = g.is_empty() || g.parse::<usize>().is_ok_and(|n| (1..=n_groups).contains(&n));
            let field_ok = GROUP.contains(&field)
                || field
                    .strip_prefix("interface")
                    .is_some_and(|n| n.parse::<usize>().is_ok());
            return group_ok && field_ok;
        }
        if let Some(e) = ns.strip_prefix("Events") {
            return e.parse::<usize>().is_ok_and(|n| (1..=n_events).contains(&n)) && EVENT.contains(&field);
        }
        interfaces.iter().any(|i| i.name == ns) && IFACE.contains(&field)
    };
    s.keys().filter(|k| !known(k)).map(str::to_string).collect()
}

/// Reads a scenario file and applies `overrides` (`key`, `value`) on top.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut settings = Settings::parse(&text)?;
    for (k, v) in overrides {
        settings.set(k, v);
    }
    let base = path.parent().unwrap_or(Path::new("."));
    ScenarioConfig::from_settings(settings, base)
}

/// Splits `key=value` for `--set`.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("override `{s}` is not key=value"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("override `{s}` has an empty key"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINI: &str = "\
Scenario.name = mini
Scenario.endTime = 1800
Scenario.updateInterval = 0.1
Scenario.nrofHostGroups = 2
MovementModel.rngSeed = 1
MapBasedMovement.nrofMapFiles = 1
MapBasedMovement.mapFile1 = map.wkt   # trailing comment
btInterface.type = SimpleBroadcastInterface
btInterface.transmitSpeed = 250k
btInterface.transmitRange = 30
Group.router = EpidemicRouter
Group.nrofInterfaces = 1
Group.interface1 = btInterface
Group1.nrofHosts = 1500
Group1.movementModel = MapBasedMovement
Group1.speed = 0.4,1.4
Group1.waitTime = 0,10
Group1.bufferSize = 5M
Group1.msgTtl = 30
Group2.nrofHosts = 2
Group2.movementModel = StationaryMovement
Group2.bufferSize = 200M
Group2.nodeLocation = 5622, 4593
Group2.nodeLocation = 5683, 4270
Events.nrof = 1
Events1.class = MessageEventGenerator
Events1.interval = 40,60
Events1.size = 100k,500k
Events1.hosts = 0,1500
Events1.tohosts = 1500,1502
Events1.prefix = 5
";

    fn load(text: &str) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::from_settings(Settings::parse(text)?, Path::new("/tmp/x"))
    }

    #[test]
    fn island_style_values() {
        let c = load(MINI).unwrap();
        assert_eq!(c.groups[0].count, 1500);
        assert_eq!(c.groups[0].buffer_size, 5_000_000);
        assert_eq!(c.groups[1].buffer_size, 200_000_000);
        assert_eq!(c.events[0].size, (100_000, 500_000));
        assert_eq!(c.events[0].interval, (40.0, 60.0));
        assert_eq!(c.events[0].hosts, 0..1500);
        assert_eq!(c.events[0].prefix, "5");
        assert_eq!(c.interfaces[0].transmit_speed, 250_000.0);
        assert_eq!(c.groups[1].locations[0], Point::new(5622.0, 4593.0));
        assert_eq!(c.groups[1].first_id, 1500);
        assert_eq!(c.groups[1].ids(), 1500..1502);
        assert_eq!(c.groups[0].router, "EpidemicRouter");
        assert_eq!(c.map_file, PathBuf::from("/tmp/x/map.wkt"));
        assert_eq!(c.groups[1].msg_ttl, None);
        assert_eq!(c.groups[1].wait, None);
        assert!(c.warnings.is_empty(), "{:?}", c.warnings);
        assert_eq!(c.prophet, ProphetParams::default());
    }

    #[test]
    fn overrides_replace_values() {
        let mut s = Settings::parse(MINI).unwrap();
        s.set("btInterface.transmitRange", "15");
        s.set("Group2.nodeLocation", "1,2");
        s.set("Group2.nrofHosts", "1");
        s.set("Events1.tohosts", "1500,1501");
        let c = ScenarioConfig::from_settings(s, Path::new(".")).unwrap();
        assert_eq!(c.interfaces[0].transmit_range, 15.0);
        assert_eq!(c.groups[1].locations, vec![Point::new(1.0, 2.0)]);
    }

    #[test]
    fn unknown_keys_warn() {
        let c = load(&format!("{MINI}\nFoo.bar = 1\nGroup9.speed = 1,2\n")).unwrap();
        assert_eq!(c.warnings.len(), 2);
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINI.replace("Scenario.endTime = 1800\n", "");
        match load(&text) {
            Err(ConfigError::Missing(k)) => assert_eq!(k, "Scenario.endTime"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_value_reports_line() {
        let text = MINI.replace("Group1.bufferSize = 5M", "Group1.bufferSize = lots");
        let err = load(&text).unwrap_err().to_string();
        assert!(err.contains("line 18"), "{err}");
        let err = Settings::parse("a = 1\nno equals here\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn overlapping_host_ranges_rejected() {
        let text = MINI.replace("Events1.tohosts = 1500,1502", "Events1.tohosts = 1400,1502");
        assert!(matches!(load(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn stationary_needs_locations() {
        let text = MINI.replace("Group2.nodeLocation = 5683, 4270\n", "");
        assert!(matches!(load(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn quantities() {
        assert_eq!(parse_quantity("250k").unwrap(), 250_000.0);
        assert_eq!(parse_quantity("10M").unwrap(), 10_000_000.0);
        assert_eq!(parse_quantity("0.1").unwrap(), 0.1);
        assert!(parse_quantity("x").is_err());
        assert_eq!(parse_pair("5622, 4593").unwrap(), (5622.0, 4593.0));
        assert_eq!(parse_pair("7").unwrap(), (7.0, 7.0));
        assert!(parse_pair("1,2,3").is_err());
        assert_eq!(parse_override("a.b = 3").unwrap(), ("a.b".into(), "3".into()));
        assert!(parse_override("nothing").is_err());
    }
}
