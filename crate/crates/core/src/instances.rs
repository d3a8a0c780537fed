//! Synthetic capacity-expansion instances and their on-disk format.
//!
//! Planning columns are generator capacities, then transmission link capacities,
//! then optional storage power capacities and per-period emission allowances.
//! Every period dispatches generators hour by hour against zonal demand, moves
//! power along links, and optionally cycles a small storage unit per zone.
use std::f64::consts::PI;
use std::path::Path;

use cga_lp::{Constraint, RowSense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Instance, OpConstraint, OperationalBlock, PlanningBlock, SparseMatrix, VariableGroup};
use crate::seeds::derive_seed;

pub const INSTANCE_SCHEMA_VERSION: u64 = 1;

/// Storage energy capacity in hours of power capacity.
const STORAGE_HOURS: f64 = 4.0;
const STORAGE_EFFICIENCY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub zone: usize,
    pub tech: String,
    /// Cost per unit of capacity over the whole horizon.
    pub capex: f64,
    /// Cost per unit of energy.
    pub varcost: f64,
    pub max_cap: f64,
    /// One fraction per hour of the horizon (`periods × hours_per_period`).
    pub availability: Vec<f64>,
    /// Unit size for integer builds; falls back to the spec-wide block.
    #[serde(default)]
    pub integral_block: Option<f64>,
    #[serde(default)]
    pub emission_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: usize,
    pub to: usize,
    pub capex: f64,
    pub max_cap: f64,
    #[serde(default)]
    pub integral_block: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceSpec {
    pub name: Option<String>,
    pub zones: usize,
    pub periods: usize,
    pub hours_per_period: usize,
    pub seed: u64,
    pub integer_mode: bool,
    /// Default unit size for integer builds.
    pub integral_block: f64,
    /// Technologies placed in every zone when `generators` is absent.
    pub techs: Vec<String>,
    pub generators: Option<Vec<GeneratorSpec>>,
    /// Links between consecutive zones when absent.
    pub links: Option<Vec<LinkSpec>>,
    /// One profile per zone over the whole horizon; generated when absent.
    pub demand: Option<Vec<Vec<f64>>>,
    pub peak_demand: f64,
    pub wheeling_cost: f64,
    pub storage: bool,
    /// Total emission allowance over the horizon; absent disables the cap.
    pub emission_cap: Option<f64>,
    pub slack_penalty: Option<f64>,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            name: None,
            zones: 2,
            periods: 2,
            hours_per_period: 8,
            seed: 0,
            integer_mode: false,
            integral_block: 0.5,
            techs: ["thermal", "solar", "wind", "peaker"].map(String::from).to_vec(),
            generators: None,
            links: None,
            demand: None,
            peak_demand: 1.0,
            wheeling_cost: 1e-3,
            storage: false,
            emission_cap: None,
            slack_penalty: None,
        }
    }
}

impl InstanceSpec {
    pub fn horizon(&self) -> usize {
        self.periods * self.hours_per_period
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.zones < 1 || self.periods < 1 || self.hours_per_period < 1 {
            return bad("zones, periods and hours_per_period must be >= 1".into());
        }
        if !(self.integral_block > 0.0) {
            return bad("integral_block must be > 0".into());
        }
        if !(self.peak_demand >= 0.0) || !(self.wheeling_cost >= 0.0) {
            return bad("peak_demand and wheeling_cost must be >= 0".into());
        }
        if self.generators.is_none() {
            for t in &self.techs {
                if tech_defaults(t).is_none() {
                    return bad(format!("unknown technology `{t}`"));
                }
            }
        }
        let horizon = self.horizon();
        for (i, g) in self.generators.iter().flatten().enumerate() {
            if g.zone >= self.zones {
                return bad(format!("generator {i} references zone {}", g.zone));
            }
            if !(g.capex >= 0.0) || !(g.varcost >= 0.0) || !(g.max_cap > 0.0) || !g.max_cap.is_finite() {
                return bad(format!(
                    "generator {i} needs capex, varcost >= 0 and finite max_cap > 0"
                ));
            }
            if g.availability.len() != horizon || g.availability.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return bad(format!("generator {i} needs {horizon} availability values in [0, 1]"));
            }
            if g.integral_block.is_some_and(|b| !(b > 0.0)) || !(g.emission_rate >= 0.0) {
                return bad(format!(
                    "generator {i} has a non-positive block or negative emission rate"
                ));
            }
        }
        for (i, l) in self.links.iter().flatten().enumerate() {
            if l.from >= self.zones || l.to >= self.zones || l.from == l.to {
                return bad(format!("link {i} must join two distinct zones"));
            }
            if !(l.capex >= 0.0) || !(l.max_cap > 0.0) || !l.max_cap.is_finite() {
                return bad(format!("link {i} needs capex >= 0 and finite max_cap > 0"));
            }
        }
        if let Some(d) = &self.demand {
            if d.len() != self.zones || d.iter().any(|z| z.len() != horizon || z.iter().any(|v| !(*v >= 0.0))) {
                return bad(format!("demand needs {} zones × {horizon} values >= 0", self.zones));
            }
        }
        if self.emission_cap.is_some_and(|c| !(c >= 0.0) || !c.is_finite()) {
            return bad("emission_cap must be finite and >= 0".into());
        }
        if self.slack_penalty.is_some_and(|s| !(s > 0.0)) {
            return bad("slack_penalty must be > 0".into());
        }
        Ok(())
    }
}

struct TechDefaults {
    capex_rate: f64,
    varcost: f64,
    cap_factor: f64,
    emission_rate: f64,
}

fn tech_defaults(tech: &str) -> Option<TechDefaults> {
    let (capex_rate, varcost, cap_factor, emission_rate) = match tech {
        "thermal" => (0.030, 0.050, 2.0, 1.0),
        "solar" => (0.012, 0.001, 3.0, 0.0),
        "wind" => (0.018, 0.002, 3.0, 0.0),
        "peaker" => (0.008, 0.120, 2.0, 1.5),
        _ => return None,
    };
    Some(TechDefaults {
        capex_rate,
        varcost,
        cap_factor,
        emission_rate,
    })
}

fn availability_profile(tech: &str, spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let h_len = spec.hours_per_period;
    let phase: f64 = rng.gen_range(0.0..24.0);
    (0..spec.horizon())
        .map(|t| {
            let h = (t % h_len) as f64 * 24.0 / h_len as f64;
            let noise: f64 = rng.gen_range(-1.0..1.0);
            let a = match tech {
                "solar" => (PI * (h - 6.0) / 12.0).sin().max(0.0) * (0.85 + 0.15 * noise),
                "wind" => 0.45 + 0.25 * (2.0 * PI * (h + phase) / 24.0).sin() + 0.15 * noise,
                _ => 0.95 + 0.03 * noise,
            };
            // Round-off such as sin(π) would leave meaningless tiny coefficients.
            if a < 1e-6 {
                0.0
            } else {
                a.min(1.0)
            }
        })
        .collect()
}

fn demand_profile(spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let h_len = spec.hours_per_period;
    let phase: f64 = rng.gen_range(-2.0..2.0);
    let level: f64 = rng.gen_range(0.8..1.0);
    (0..spec.horizon())
        .map(|t| {
            let h = (t % h_len) as f64 * 24.0 / h_len as f64;
            let p = (t / h_len) as f64;
            let noise: f64 = rng.gen_range(-1.0..1.0);
            let d = 0.65
                + 0.2 * (2.0 * PI * (h - 9.0 + phase) / 24.0).sin()
                + 0.08 * (2.0 * PI * p / spec.periods.max(2) as f64).cos()
                + 0.05 * noise;
            (spec.peak_demand * level * d).max(0.0)
        })
        .collect()
}

/// Fills generated defaults for everything the spec leaves open.
fn resolve(spec: &InstanceSpec) -> (Vec<GeneratorSpec>, Vec<LinkSpec>, Vec<Vec<f64>>) {
    let horizon_hours = spec.horizon() as f64;
    let generators = spec.generators.clone().unwrap_or_else(|| {
        let mut out = Vec::new();
        for z in 0..spec.zones {
            for tech in &spec.techs {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("gen/{z}/{tech}")));
                let d = tech_defaults(tech).expect("validated technology");
                let jitter = 1.0 + 0.1 * rng.gen_range(-1.0..1.0);
                out.push(GeneratorSpec {
                    zone: z,
                    tech: tech.clone(),
                    capex: d.capex_rate * horizon_hours * jitter,
                    varcost: d.varcost * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)),
                    max_cap: d.cap_factor * spec.peak_demand.max(f64::MIN_POSITIVE),
                    availability: availability_profile(tech, spec, &mut rng),
                    integral_block: None,
                    emission_rate: d.emission_rate,
                });
            }
        }
        out
    });
    let links = spec.links.clone().unwrap_or_else(|| {
        (1..spec.zones)
            .map(|z| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("link/{z}")));
                LinkSpec {
                    from: z - 1,
                    to: z,
                    capex: 0.004 * horizon_hours * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)),
                    max_cap: spec.peak_demand.max(f64::MIN_POSITIVE),
                    integral_block: None,
                }
            })
            .collect()
    });
    let demand = spec.demand.clone().unwrap_or_else(|| {
        (0..spec.zones)
            .map(|z| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("demand/{z}")));
                demand_profile(spec, &mut rng)
            })
            .collect()
    });
    (generators, links, demand)
}

/// Builds an instance from `spec`. Identical specs give identical instances.
pub fn generate_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let (gens, links, demand) = resolve(spec);
    let h_len = spec.hours_per_period;
    let zones = spec.zones;

    // Planning block.
    let mut names = Vec::new();
    let mut cost = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut integer = Vec::new();
    let mut groups = Vec::new();
    let mut push_col = |name: String, capex: f64, max_cap: f64, block: Option<f64>| -> (usize, f64) {
        let j = cost.len();
        names.push(name);
        lower.push(0.0);
        match block {
            Some(b) => {
                cost.push(capex * b);
                upper.push((max_cap / b + 1e-9).floor());
                integer.push(true);
                (j, b)
            }
            None => {
                cost.push(capex);
                upper.push(max_cap);
                integer.push(false);
                (j, 1.0)
            }
        }
    };
    let block_of = |own: Option<f64>| spec.integer_mode.then(|| own.unwrap_or(spec.integral_block));
    let gen_cols: Vec<(usize, f64)> = gens
        .iter()
        .map(|g| {
            push_col(
                format!("cap/z{}/{}", g.zone, g.tech),
                g.capex,
                g.max_cap,
                block_of(g.integral_block),
            )
        })
        .collect();
    let link_cols: Vec<(usize, f64)> = links
        .iter()
        .map(|l| {
            push_col(
                format!("link/{}-{}", l.from, l.to),
                l.capex,
                l.max_cap,
                block_of(l.integral_block),
            )
        })
        .collect();
    let storage_cols: Vec<usize> = if spec.storage {
        let capex = 0.010 * spec.horizon() as f64;
        (0..zones)
            .map(|z| {
                push_col(
                    format!("storage/z{z}"),
                    capex,
                    spec.peak_demand.max(f64::MIN_POSITIVE),
                    None,
                )
                .0
            })
            .collect()
    } else {
        Vec::new()
    };
    let emission_cols: Vec<usize> = match spec.emission_cap {
        Some(cap) => (0..spec.periods)
            .map(|p| push_col(format!("emissions/p{}", p + 1), 0.0, cap, None).0)
            .collect(),
        None => Vec::new(),
    };
    let mut constraints = Vec::new();
    if let Some(cap) = spec.emission_cap {
        constraints.push(Constraint {
            coeffs: emission_cols.iter().map(|&j| (j, 1.0)).collect(),
            sense: RowSense::Le,
            rhs: cap,
        });
    }

    let mut tech_names: Vec<&str> = Vec::new();
    for g in &gens {
        if !tech_names.contains(&g.tech.as_str()) {
            tech_names.push(&g.tech);
        }
    }
    for z in 0..zones {
        for tech in &tech_names {
            let members: Vec<usize> = gens
                .iter()
                .zip(&gen_cols)
                .filter(|(g, _)| g.zone == z && g.tech == *tech)
                .map(|(_, &(j, _))| j)
                .collect();
            if !members.is_empty() {
                groups.push(VariableGroup {
                    name: format!("z{z}/{tech}"),
                    members,
                });
            }
        }
    }
    for (l, &(j, _)) in links.iter().zip(&link_cols) {
        groups.push(VariableGroup {
            name: format!("link/{}-{}", l.from, l.to),
            members: vec![j],
        });
    }
    for (z, &j) in storage_cols.iter().enumerate() {
        groups.push(VariableGroup {
            name: format!("storage/z{z}"),
            members: vec![j],
        });
    }

    let planning = PlanningBlock {
        names,
        cost,
        lower,
        upper,
        integer,
        constraints,
        groups,
    };
    let n = planning.dim();
    let max_op_cost = gens
        .iter()
        .map(|g| g.varcost)
        .chain([spec.wheeling_cost])
        .fold(0.0, f64::max);
    let slack_penalty = spec.slack_penalty.unwrap_or(1e4 * max_op_cost.max(1.0));

    let periods = (0..spec.periods)
        .map(|p| {
            let mut b = BlockBuilder::default();
            let t0 = p * h_len;
            // Dispatch columns and availability limits.
            let gen_y: Vec<Vec<usize>> = gens
                .iter()
                .map(|g| (0..h_len).map(|_| b.col(g.varcost)).collect())
                .collect();
            for ((g, &(j, unit)), ys) in gens.iter().zip(&gen_cols).zip(&gen_y) {
                for (h, &y) in ys.iter().enumerate() {
                    b.coupling_row(&[(j, -g.availability[t0 + h] * unit)], &[(y, 1.0)], 0.0);
                }
            }
            let flows: Vec<Vec<(usize, usize)>> = links
                .iter()
                .map(|_| {
                    (0..h_len)
                        .map(|_| (b.col(spec.wheeling_cost), b.col(spec.wheeling_cost)))
                        .collect()
                })
                .collect();
            for (&(j, unit), fl) in link_cols.iter().zip(&flows) {
                for &(fwd, bwd) in fl {
                    b.coupling_row(&[(j, -unit)], &[(fwd, 1.0)], 0.0);
                    b.coupling_row(&[(j, -unit)], &[(bwd, 1.0)], 0.0);
                }
            }
            let storage: Vec<Vec<(usize, usize, usize)>> = storage_cols
                .iter()
                .map(|&j| {
                    let cols: Vec<_> = (0..h_len).map(|_| (b.col(1e-4), b.col(1e-4), b.col(0.0))).collect();
                    for &(ch, dis, soc) in &cols {
                        b.coupling_row(&[(j, -1.0)], &[(ch, 1.0)], 0.0);
                        b.coupling_row(&[(j, -1.0)], &[(dis, 1.0)], 0.0);
                        b.coupling_row(&[(j, -STORAGE_HOURS)], &[(soc, 1.0)], 0.0);
                    }
                    cols
                })
                .collect();
            if let Some(&e) = emission_cols.get(p) {
                let mut ops = Vec::new();
                for (g, ys) in gens.iter().zip(&gen_y) {
                    if g.emission_rate > 0.0 {
                        ops.extend(ys.iter().map(|&y| (y, g.emission_rate)));
                    }
                }
                b.coupling_row(&[(e, -1.0)], &ops, 0.0);
            }

            // Zonal balance.
            for z in 0..zones {
                for h in 0..h_len {
                    let mut coeffs = Vec::new();
                    for (g, ys) in gens.iter().zip(&gen_y) {
                        if g.zone == z {
                            coeffs.push((ys[h], 1.0));
                        }
                    }
                    for (l, fl) in links.iter().zip(&flows) {
                        let (fwd, bwd) = fl[h];
                        if l.to == z {
                            coeffs.push((fwd, 1.0));
                            coeffs.push((bwd, -1.0));
                        }
                        if l.from == z {
                            coeffs.push((fwd, -1.0));
                            coeffs.push((bwd, 1.0));
                        }
                    }
                    if let Some(st) = storage.get(z) {
                        let (ch, dis, _) = st[h];
                        coeffs.push((dis, 1.0));
                        coeffs.push((ch, -1.0));
                    }
                    b.op_constraints.push(OpConstraint {
                        coeffs,
                        sense: RowSense::Eq,
                        rhs: demand[z][t0 + h],
                        balance: true,
                    });
                }
            }
            // Cyclic state of charge within the period.
            for st in &storage {
                for h in 0..h_len {
                    let (ch, dis, soc) = st[h];
                    let prev = st[(h + h_len - 1) % h_len].2;
                    let mut coeffs = vec![(soc, 1.0), (ch, -STORAGE_EFFICIENCY), (dis, 1.0 / STORAGE_EFFICIENCY)];
                    if prev != soc {
                        coeffs.push((prev, -1.0));
                    } else {
                        coeffs.retain(|&(c, _)| c != soc);
                    }
                    b.op_constraints.push(OpConstraint {
                        coeffs,
                        sense: RowSense::Eq,
                        rhs: 0.0,
                        balance: false,
                    });
                }
            }
            b.finish(p + 1, n, slack_penalty)
        })
        .collect();

    let instance = Instance {
        name: spec.name.clone().unwrap_or_else(|| {
            format!(
                "synthetic-z{}-p{}-h{}-s{}{}",
                zones,
                spec.periods,
                h_len,
                spec.seed,
                if spec.integer_mode { "-int" } else { "" }
            )
        }),
        planning,
        periods,
    };
    instance.ensure_valid()?;
    Ok(instance)
}

#[derive(Default)]
struct BlockBuilder {
    op_cost: Vec<f64>,
    coupling: Vec<(usize, usize, f64)>,
    op_matrix: Vec<(usize, usize, f64)>,
    rows: usize,
    op_constraints: Vec<OpConstraint>,
}

impl BlockBuilder {
    fn col(&mut self, cost: f64) -> usize {
        self.op_cost.push(cost);
        self.op_cost.len() - 1
    }

    fn coupling_row(&mut self, planning: &[(usize, f64)], ops: &[(usize, f64)], rhs: f64) {
        debug_assert_eq!(rhs, 0.0);
        let i = self.rows;
        self.coupling
            .extend(planning.iter().filter(|(_, a)| *a != 0.0).map(|&(j, a)| (i, j, a)));
        self.op_matrix
            .extend(ops.iter().filter(|(_, a)| *a != 0.0).map(|&(j, a)| (i, j, a)));
        self.rows += 1;
    }

    fn finish(self, id: usize, n: usize, slack_penalty: f64) -> OperationalBlock {
        let m = self.op_cost.len();
        OperationalBlock {
            id,
            op_lower: vec![0.0; m],
            op_upper: vec![f64::INFINITY; m],
            coupling: SparseMatrix {
                rows: self.rows,
                cols: n,
                entries: self.coupling,
            },
            op_matrix: SparseMatrix {
                rows: self.rows,
                cols: m,
                entries: self.op_matrix,
            },
            rhs: vec![0.0; self.rows],
            op_cost: self.op_cost,
            op_constraints: self.op_constraints,
            slack_penalty,
        }
    }
}

/// Groups of planning columns that belong to one zone.
pub fn zonal_groups(instance: &Instance) -> Vec<Vec<usize>> {
    let mut zones: Vec<(String, Vec<usize>)> = Vec::new();
    for (j, name) in instance.planning.names.iter().enumerate() {
        let Some(zone) = name
            .split('/')
            .find(|s| s.starts_with('z') && s[1..].parse::<usize>().is_ok())
        else {
            continue;
        };
        match zones.iter_mut().find(|(z, _)| z == zone) {
            Some((_, members)) => members.push(j),
            None => zones.push((zone.to_string(), vec![j])),
        }
    }
    zones.into_iter().map(|(_, m)| m).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    schema_version: u64,
    name: String,
    planning: PlanningBlock,
    periods: Vec<OperationalBlock>,
}

const SECTIONS: [&str; 4] = ["schema_version", "name", "planning", "periods"];

/// Serialises an instance to its text form.
pub fn instance_to_string(instance: &Instance) -> String {
    let doc = InstanceDocument {
        schema_version: INSTANCE_SCHEMA_VERSION,
        name: instance.name.clone(),
        planning: instance.planning.clone(),
        periods: instance.periods.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance serialises");
    s.push('\n');
    s
}

/// Parses the text form, reporting truncation, schema mismatches and unknown
/// fields with their position.
pub fn instance_from_str(text: &str) -> Result<Instance> {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) if e.classify() == Category::Eof => {
            let section = SECTIONS
                .iter()
                .filter_map(|s| text.find(&format!("\"{s}\"")).map(|pos| (pos, *s)))
                .max()
                .map_or("schema_version", |(_, s)| s);
            return Err(Error::Truncated {
                line: e.line(),
                section: section.to_string(),
            });
        }
        Err(e) => {
            return Err(Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })
        }
    };
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(INSTANCE_SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(Error::SchemaVersion {
                found,
                expected: INSTANCE_SCHEMA_VERSION,
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "missing or non-integer `schema_version`".into(),
            })
        }
    }
    let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(Instance {
        name: doc.name,
        planning: doc.planning,
        periods: doc.periods,
    })
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_string(instance)).map_err(|e| Error::io(path, e))
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    instance_from_str(&text)
}

/// Hex SHA-256 of the serialised instance.
pub fn instance_hash(instance: &Instance) -> String {
    let digest = Sha256::digest(instance_to_string(instance).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
