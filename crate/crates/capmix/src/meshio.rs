//! `mesh info` summary and the plain-text node dump.
//!
//! Dump columns, comma separated with one header row:
//! `node_index, x0..x{n}, tag, w, xi0..xi{n}, detA_F`, where `tag` is
//! `interior` or `boundary` and `w` is the quadrature weight on the sphere.

use std::io::{self, Write};

use serde::Serialize;

use capmix_core::functionals::cap_volume;
use capmix_core::{CapMesh, NodeTag};

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub n: usize,
    pub kind: String,
    pub level: u32,
    pub nodes: usize,
    pub boundary_nodes: usize,
    pub spacing: f64,
    pub order: u32,
    pub parameter_area: f64,
    pub cap_area: f64,
    pub cap_volume: Option<f64>,
}

pub fn mesh_info(mesh: &CapMesh) -> MeshInfo {
    MeshInfo {
        n: mesh.n(),
        kind: format!("{:?}", mesh.kind()).to_lowercase(),
        level: mesh.level(),
        nodes: mesh.len(),
        boundary_nodes: mesh.boundary().len(),
        spacing: mesh.spacing(),
        order: mesh.order(),
        parameter_area: mesh.parameter_area(),
        cap_area: mesh.cap_area(),
        cap_volume: cap_volume(mesh).ok(),
    }
}

pub fn dump_nodes<W: Write>(mesh: &CapMesh, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = mesh.dim();
    let mut header = vec!["node_index".to_string()];
    header.extend((0..d).map(|k| format!("x{k}")));
    header.extend(["tag".into(), "w".into()]);
    header.extend((0..d).map(|k| format!("xi{k}")));
    header.push("detA_F".into());
    w.write_record(&header)?;
    for (i, node) in mesh.nodes().iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(node.x.iter().map(|v| format!("{v:?}")));
        row.push(match node.tag {
            NodeTag::Interior => "interior".into(),
            NodeTag::Boundary => "boundary".into(),
        });
        row.push(format!("{:?}", node.weight));
        row.extend(node.xi.iter().map(|v| format!("{v:?}")));
        row.push(format!("{:?}", node.det_a));
        w.write_record(&row)?;
    }
    w.flush()
}
