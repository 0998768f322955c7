//! GMSH ASCII v2.2 reader and writer.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryTag, Region, TriMesh};
use crate::error::{Error, Result};
use crate::geom::{orient, Vec2};
use crate::scalar::Real;

/// What a physical group stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupRole {
    Boundary(BoundaryTag),
    Region(Region),
}

impl GroupRole {
    fn default_id(self) -> usize {
        match self {
            GroupRole::Boundary(t) => t as usize + 1,
            GroupRole::Region(Region::Omega) => 6,
            GroupRole::Region(Region::Obstacle) => 7,
        }
    }

    fn dim(self) -> usize {
        match self {
            GroupRole::Boundary(_) => 1,
            GroupRole::Region(_) => 2,
        }
    }
}

/// Physical-group name table.
///
/// Groups are looked up by their name from `$PhysicalNames`, or by their
/// numeric id written as a string when the file has no name for them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalNames {
    map: BTreeMap<String, GroupRole>,
}

impl Default for PhysicalNames {
    /// Canonical names `G1`..`G5`, `OMEGA`, `D`, plus their default numeric ids 1..7.
    fn default() -> Self {
        let mut t = Self::empty();
        for tag in BoundaryTag::ALL {
            t.insert(tag.name(), GroupRole::Boundary(tag));
        }
        t.insert("OMEGA", GroupRole::Region(Region::Omega));
        t.insert("D", GroupRole::Region(Region::Obstacle));
        let roles: Vec<_> = t.map.values().copied().collect();
        for r in roles {
            t.insert(&r.default_id().to_string(), r);
        }
        t
    }
}

impl PhysicalNames {
    pub fn empty() -> Self {
        Self {
            map: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, role: GroupRole) {
        self.map.insert(name.to_string(), role);
    }

    pub fn get(&self, name: &str) -> Option<GroupRole> {
        self.map.get(name).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, GroupRole)> + '_ {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Name written for `role`: the first non-numeric name mapping to it.
    fn name_for(&self, role: GroupRole) -> String {
        self.map
            .iter()
            .find(|(k, v)| **v == role && k.parse::<usize>().is_err())
            .map(|(k, _)| k.clone())
            .unwrap_or_else(|| match role {
                GroupRole::Boundary(t) => t.name().to_string(),
                GroupRole::Region(r) => r.to_string(),
            })
    }
}

pub fn load_msh<T: Real>(path: impl AsRef<Path>, names: &PhysicalNames) -> Result<TriMesh<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_msh(&text, names)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if !l.is_empty() {
                        return Ok(l);
                    }
                }
                None => {
                    return Err(Error::MalformedMesh {
                        line: self.line + 1,
                        msg: "unexpected end of file".into(),
                    })
                }
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::MalformedMesh {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn count(&mut self) -> Result<usize> {
        let l = self.next_line()?;
        l.parse().map_err(|_| self.err(format!("expected a count, got `{l}`")))
    }

    fn expect(&mut self, marker: &str) -> Result<()> {
        let l = self.next_line()?;
        if l == marker {
            Ok(())
        } else {
            Err(self.err(format!("expected `{marker}`, got `{l}`")))
        }
    }
}

fn parse_num<N: std::str::FromStr>(lines: &Lines, tok: Option<&str>, what: &str) -> Result<N> {
    let tok = tok.ok_or_else(|| lines.err(format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| lines.err(format!("cannot parse {what} from `{tok}`")))
}

/// Parses GMSH v2.2 ASCII text.
///
/// Triangles (types 2 and 9) become cells, lines (types 1 and 8) tagged
/// boundary edges; only the corner nodes of second-order elements are used.
/// Points are ignored. Clockwise triangles are reoriented, vertices not
/// used by any cell are dropped and the rest renumbered in file order.
pub fn parse_msh<T: Real>(text: &str, names: &PhysicalNames) -> Result<TriMesh<T>> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut group_names: HashMap<(usize, usize), String> = HashMap::new();
    let mut nodes: HashMap<usize, Vec2<f64>> = HashMap::new();
    let mut node_order: Vec<usize> = Vec::new();
    let mut triangles: Vec<([usize; 3], usize)> = Vec::new();
    let mut segments: Vec<([usize; 2], usize)> = Vec::new();
    let mut seen_format = false;
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some((i, raw)) = lines.inner.next() {
        lines.line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        match l {
            "$MeshFormat" => {
                let hdr = lines.next_line()?;
                let mut it = hdr.split_whitespace();
                let version: String = parse_num(&lines, it.next(), "version")?;
                let file_type: u32 = parse_num(&lines, it.next(), "file type")?;
                if !version.starts_with("2.") {
                    return Err(lines.err(format!("unsupported format version {version}")));
                }
                if file_type != 0 {
                    return Err(lines.err("binary files are not supported"));
                }
                lines.expect("$EndMeshFormat")?;
                seen_format = true;
            }
            "$PhysicalNames" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim: usize = parse_num(&lines, it.next(), "dimension")?;
                    let id: usize = parse_num(&lines, it.next(), "physical id")?;
                    let name = it
                        .next()
                        .map(|s| s.trim().trim_matches('"').to_string())
                        .ok_or_else(|| lines.err("missing physical name"))?;
                    group_names.insert((dim, id), name);
                }
                lines.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let n = lines.count()?;
                node_order.reserve(n);
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let mut it = l.split_whitespace();
                    let id: usize = parse_num(&lines, it.next(), "node id")?;
                    let x: f64 = parse_num(&lines, it.next(), "x coordinate")?;
                    let y: f64 = parse_num(&lines, it.next(), "y coordinate")?;
                    if nodes.insert(id, Vec2::new(x, y)).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    node_order.push(id);
                }
                lines.expect("$EndNodes")?;
                seen_nodes = true;
            }
            "$Elements" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let fields: Vec<&str> = l.split_whitespace().collect();
                    let mut it = fields.iter().copied();
                    let _id: usize = parse_num(&lines, it.next(), "element id")?;
                    let etype: usize = parse_num(&lines, it.next(), "element type")?;
                    let ntags: usize = parse_num(&lines, it.next(), "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(parse_num::<usize>(&lines, it.next(), "element tag")?);
                    }
                    let physical = tags.first().copied().unwrap_or(0);
                    let node_ids: Vec<usize> = it
                        .map(|t| parse_num(&lines, Some(t), "node reference"))
                        .collect::<Result<_>>()?;
                    let need = match etype {
                        1 => 2,
                        8 => 3,
                        2 => 3,
                        9 => 6,
                        15 => 1,
                        other => {
                            return Err(lines.err(format!("unsupported element type {other}")))
                        }
                    };
                    if node_ids.len() != need {
                        return Err(lines.err(format!(
                            "element type {etype} needs {need} nodes, found {}",
                            node_ids.len()
                        )));
                    }
                    match etype {
                        1 | 8 => segments.push(([node_ids[0], node_ids[1]], physical)),
                        2 | 9 => triangles.push(([node_ids[0], node_ids[1], node_ids[2]], physical)),
                        _ => {}
                    }
                }
                lines.expect("$EndElements")?;
                seen_elements = true;
            }
            other if other.starts_with("$") => {
                let end = format!("$End{}", &other[1..]);
                loop {
                    if lines.next_line()? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content `{other}`"))),
        }
    }
    if !seen_format || !seen_nodes || !seen_elements {
        return Err(Error::MalformedMesh {
            line: lines.line,
            msg: "missing $MeshFormat, $Nodes or $Elements section".into(),
        });
    }

    let resolve = |dim: usize, physical: usize| -> Result<GroupRole> {
        let name = group_names
            .get(&(dim, physical))
            .cloned()
            .unwrap_or_else(|| physical.to_string());
        names
            .get(&name)
            .ok_or(Error::UnknownPhysicalGroup(name))
    };

    let node_ref = |id: usize| -> Result<Vec2<f64>> {
        nodes.get(&id).copied().ok_or_else(|| Error::InvalidMesh(format!(
            "element references node {id}, which does not exist"
        )))
    };

    // keep referenced nodes only, in file order
    let mut used: HashMap<usize, usize> = HashMap::new();
    for (tri, _) in &triangles {
        for &id in tri {
            node_ref(id)?;
            used.insert(id, usize::MAX);
        }
    }
    let mut vertices = Vec::with_capacity(used.len());
    for &id in &node_order {
        if let Some(slot) = used.get_mut(&id) {
            *slot = vertices.len();
            let p = nodes[&id];
            vertices.push(Vec2::new(T::lit(p.x), T::lit(p.y)));
        }
    }

    let mut cells = Vec::with_capacity(triangles.len());
    let mut regions = Vec::with_capacity(triangles.len());
    for (tri, physical) in &triangles {
        let region = match resolve(2, *physical)? {
            GroupRole::Region(r) => r,
            GroupRole::Boundary(t) => {
                return Err(Error::InvalidMesh(format!(
                    "triangle assigned to boundary group {t}"
                )))
            }
        };
        let mut c = [used[&tri[0]], used[&tri[1]], used[&tri[2]]];
        if orient(vertices[c[0]], vertices[c[1]], vertices[c[2]]) < T::zero() {
            c.swap(1, 2);
        }
        cells.push(c);
        regions.push(region);
    }

    let mut tagged = Vec::with_capacity(segments.len());
    for (seg, physical) in &segments {
        let tag = match resolve(1, *physical)? {
            GroupRole::Boundary(t) => t,
            GroupRole::Region(r) => {
                return Err(Error::InvalidMesh(format!("line element assigned to region {r}")))
            }
        };
        let (Some(&a), Some(&b)) = (used.get(&seg[0]), used.get(&seg[1])) else {
            return Err(Error::InvalidMesh(format!(
                "boundary segment ({}, {}) does not touch any triangle",
                seg[0], seg[1]
            )));
        };
        tagged.push((a, b, tag));
    }

    TriMesh::new(vertices, cells, regions, &tagged)
}

/// Serializes a mesh as GMSH v2.2 ASCII. Physical ids are 1..5 for the
/// boundary tags, 6 for water and 7 for the obstacle; names come from `names`.
pub fn write_msh<T: Real>(mesh: &TriMesh<T>, names: &PhysicalNames) -> String {
    let mut out = String::new();
    out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");

    let mut roles: Vec<GroupRole> = mesh
        .boundary_edges()
        .iter()
        .map(|e| GroupRole::Boundary(e.tag))
        .chain(mesh.regions().iter().map(|&r| GroupRole::Region(r)))
        .collect();
    roles.sort();
    roles.dedup();
    let _ = writeln!(out, "$PhysicalNames\n{}", roles.len());
    for r in &roles {
        let _ = writeln!(out, "{} {} \"{}\"", r.dim(), r.default_id(), names.name_for(*r));
    }
    out.push_str("$EndPhysicalNames\n");

    let _ = writeln!(out, "$Nodes\n{}", mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(out, "{} {} {} 0", i + 1, p.x, p.y);
    }
    out.push_str("$EndNodes\n");

    let n_el = mesh.boundary_edges().len() + mesh.n_cells();
    let _ = writeln!(out, "$Elements\n{n_el}");
    let mut id = 1;
    for e in mesh.boundary_edges() {
        let pid = GroupRole::Boundary(e.tag).default_id();
        let _ = writeln!(out, "{id} 1 2 {pid} {pid} {} {}", e.a + 1, e.b + 1);
        id += 1;
    }
    for (c, cell) in mesh.cells().iter().enumerate() {
        let pid = GroupRole::Region(mesh.regions()[c]).default_id();
        let _ = writeln!(
            out,
            "{id} 2 2 {pid} {pid} {} {} {}",
            cell[0] + 1,
            cell[1] + 1,
            cell[2] + 1
        );
        id += 1;
    }
    out.push_str("$EndElements\n");
    out
}
