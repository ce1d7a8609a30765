use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{Commodity, Instance, InstanceError, InstanceMeta};
use crate::graph::{ArcId, DynamicGraph, NodeId, Path};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileMeta {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub alpha: f64,
    pub budget: f64,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileCommodity {
    pub origins: Vec<usize>,
    pub destinations: Vec<usize>,
    pub demand: f64,
    pub initial_path: Vec<usize>,
}

/// On-disk layout. `active[t]` lists the arc ids present at step `t`;
/// `capacity[t][a]` is the capacity of arc `a` at step `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub meta: FileMeta,
    pub nodes: usize,
    pub arcs: Vec<[usize; 2]>,
    pub active: Vec<Vec<usize>>,
    #[serde(default)]
    pub capacity: Vec<Vec<Option<f64>>>,
    pub commodities: Vec<FileCommodity>,
}

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Parse { field: field.into(), message: message.into() }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let g = &inst.graph;
        InstanceFile {
            meta: FileMeta {
                preset: inst.meta.preset.clone(),
                seed: inst.meta.seed,
                alpha: inst.alpha,
                budget: inst.budget,
                horizon: inst.horizon(),
            },
            nodes: g.node_count(),
            arcs: g.arcs().iter().map(|&(u, v)| [u.0, v.0]).collect(),
            active: (0..g.step_count()).map(|t| g.active_arcs(t).map(|a| a.0).collect()).collect(),
            capacity: (0..g.step_count()).map(|t| g.capacities(t).iter().map(|&c| Some(c)).collect()).collect(),
            commodities: inst
                .commodities
                .iter()
                .map(|c| FileCommodity {
                    origins: c.origins.iter().map(|v| v.0).collect(),
                    destinations: c.destinations.iter().map(|v| v.0).collect(),
                    demand: c.demand,
                    initial_path: c.initial_path.arcs().iter().map(|a| a.0).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = InstanceError;

    fn try_from(f: InstanceFile) -> Result<Self, InstanceError> {
        let steps = f.meta.horizon + 1;
        let mut g = DynamicGraph::new(f.nodes);
        for (i, &[u, v]) in f.arcs.iter().enumerate() {
            if u >= f.nodes || v >= f.nodes {
                return Err(parse_err(format!("arcs[{i}]"), format!("node out of range 0..{}", f.nodes)));
            }
            if u == v {
                return Err(parse_err(format!("arcs[{i}]"), "self-loop"));
            }
            if g.find_arc(NodeId(u), NodeId(v)).is_some() {
                return Err(parse_err(format!("arcs[{i}]"), "duplicate arc"));
            }
            g.add_arc(NodeId(u), NodeId(v));
        }
        let m = f.arcs.len();
        if f.active.len() != steps {
            return Err(parse_err("active", format!("expected {steps} steps, found {}", f.active.len())));
        }
        for t in 0..steps {
            let mut mask = vec![false; m];
            for &a in &f.active[t] {
                if a >= m {
                    return Err(parse_err(format!("active[{t}]"), format!("unknown arc {a}")));
                }
                mask[a] = true;
            }
            let mut caps = Vec::with_capacity(m);
            for a in 0..m {
                let c = f.capacity.get(t).and_then(|row| row.get(a).copied().flatten()).ok_or_else(|| {
                    parse_err(format!("capacity[{t}][{a}]"), format!("missing capacity of arc {} at step {t}", ArcId(a)))
                })?;
                if !(c >= 0.0) || !c.is_finite() {
                    return Err(parse_err(format!("capacity[{t}][{a}]"), format!("invalid capacity {c}")));
                }
                caps.push(c);
            }
            g.push_step(mask, caps);
        }
        let mut commodities = Vec::with_capacity(f.commodities.len());
        for (k, c) in f.commodities.into_iter().enumerate() {
            let path = Path::new(&g, c.initial_path.into_iter().map(ArcId).collect())
                .map_err(|e| parse_err(format!("commodities[{k}].initial_path"), e.to_string()))?;
            commodities.push(Commodity {
                origins: c.origins.into_iter().map(NodeId).collect(),
                destinations: c.destinations.into_iter().map(NodeId).collect(),
                demand: c.demand,
                initial_path: path,
            });
        }
        let mut inst = Instance::new(g, commodities, f.meta.alpha, f.meta.budget)?;
        inst.meta = InstanceMeta { preset: f.meta.preset, seed: f.meta.seed };
        Ok(inst)
    }
}

impl Instance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Instance, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Instance::try_from(file)
    }
}

pub fn read_instance(path: impl AsRef<FsPath>) -> Result<Instance, InstanceError> {
    Instance::from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(instance: &Instance, path: impl AsRef<FsPath>) -> Result<(), InstanceError> {
    fs::write(path, instance.to_json())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, Preset};

    const THREE_NODES: &str = r#"{
        "meta": {"preset": null, "seed": null, "alpha": 1.0, "budget": 0.5, "horizon": 1},
        "nodes": 3,
        "arcs": [[0, 1], [1, 2], [0, 2]],
        "active": [[0, 1, 2], [0, 1]],
        "capacity": [[10, 10, 5], [10, 10, 0]],
        "commodities": [
            {"origins": [0, 0], "destinations": [2, 2], "demand": 4, "initial_path": [2]},
            {"origins": [0, 0], "destinations": [1, 1], "demand": 3, "initial_path": [0]}
        ]
    }"#;

    #[test]
    fn hand_written_fixture() {
        let inst = Instance::from_json(THREE_NODES).unwrap();
        assert_eq!(inst.node_count(), 3);
        assert_eq!(inst.graph.arc_count(), 3);
        assert_eq!(inst.commodities.len(), 2);
        assert_eq!(inst.horizon(), 1);
        assert!(!inst.graph.is_active(1, ArcId(2)));
        assert_eq!(inst.total_demand(), 7.0);
    }

    #[test]
    fn round_trip() {
        for preset in [Preset::GridHard, Preset::RandomConnected] {
            let size = if preset == Preset::GridHard { 3 } else { 12 };
            let inst = generate_instance(preset, size, 9).unwrap();
            let back = Instance::from_json(&inst.to_json()).unwrap();
            assert_eq!(back, inst);
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.json");
        let inst = generate_instance(Preset::GridEasy, 2, 1).unwrap();
        write_instance(&inst, &p).unwrap();
        assert_eq!(read_instance(&p).unwrap(), inst);
    }

    #[test]
    fn missing_capacity_names_arc() {
        let text = THREE_NODES.replace("[10, 10, 0]", "[10, 10]");
        let err = Instance::from_json(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("capacity[1][2]") && msg.contains("e2"), "{msg}");

        let mut v: serde_json::Value = serde_json::from_str(THREE_NODES).unwrap();
        v.as_object_mut().unwrap().remove("capacity");
        let msg = Instance::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(msg.contains("arc e0"), "{msg}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = Instance::from_json("{\n\"meta\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
