//! Room model, AP constellations, perimeter height correction and the
//! line-of-sight test against human body cylinders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BOUNDARY_EPS: f64 = 1e-9;

/// Resolution of the floor grid used for reference distances.
pub const REFERENCE_GRID: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Axis-aligned room with its floor at z = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Room {
    pub fn new(length: f64, width: f64, height: f64) -> Result<Self> {
        let room = Self { length, width, height };
        room.validate()?;
        Ok(room)
    }

    /// 10 m x 10 m floor with a 3 m ceiling.
    pub fn table1() -> Self {
        Self { length: 10.0, width: 10.0, height: 3.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("room_l_m", self.length), ("room_w_m", self.width), ("room_h_m", self.height)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point3) -> bool {
        self.contains_xy(p.x, p.y) && p.z >= -BOUNDARY_EPS && p.z <= self.height + BOUNDARY_EPS
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= -BOUNDARY_EPS
            && x <= self.length + BOUNDARY_EPS
            && y >= -BOUNDARY_EPS
            && y <= self.width + BOUNDARY_EPS
    }

    pub fn on_wall(&self, x: f64, y: f64) -> bool {
        self.contains_xy(x, y)
            && (x.abs() <= BOUNDARY_EPS
                || (x - self.length).abs() <= BOUNDARY_EPS
                || y.abs() <= BOUNDARY_EPS
                || (y - self.width).abs() <= BOUNDARY_EPS)
    }

    /// Same floor plan with the ceiling moved so that it sits `effective_height`
    /// above a device held at `device_height`.
    pub fn with_effective_height(&self, effective_height: f64, device_height: f64) -> Self {
        Self { height: effective_height + device_height, ..*self }
    }

    /// Unit horizontal vector pointing into the room from `(x, y)`: the wall
    /// normal for points on a wall, towards the centre otherwise.
    pub fn inward_facing(&self, x: f64, y: f64) -> [f64; 2] {
        let mut f = [0.0, 0.0];
        if x.abs() <= BOUNDARY_EPS {
            f[0] += 1.0;
        }
        if (x - self.length).abs() <= BOUNDARY_EPS {
            f[0] -= 1.0;
        }
        if y.abs() <= BOUNDARY_EPS {
            f[1] += 1.0;
        }
        if (y - self.width).abs() <= BOUNDARY_EPS {
            f[1] -= 1.0;
        }
        if f == [0.0, 0.0] {
            f = [self.length / 2.0 - x, self.width / 2.0 - y];
        }
        let n = f[0].hypot(f[1]);
        if n < 1e-12 {
            [1.0, 0.0]
        } else {
            [f[0] / n, f[1] / n]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlacementType {
    /// Single ceiling-centre AP.
    A,
    /// Ceiling grid.
    B,
    /// Wall perimeter.
    C,
    /// Perimeter, hanging just above head height.
    D,
    /// Perimeter, below head height.
    E,
    /// Dense ceiling cluster.
    F,
    /// Imported from an external layout file.
    Custom,
}

impl PlacementType {
    /// Types covered by the evaluation protocol.
    pub fn is_evaluated(self) -> bool {
        matches!(self, PlacementType::A | PlacementType::B | PlacementType::C)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlacementType::A => "A",
            PlacementType::B => "B",
            PlacementType::C => "C",
            PlacementType::D => "D",
            PlacementType::E => "E",
            PlacementType::F => "F",
            PlacementType::Custom => "custom",
        }
    }
}

impl fmt::Display for PlacementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlacementType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "A" => PlacementType::A,
            "B" => PlacementType::B,
            "C" => PlacementType::C,
            "D" => PlacementType::D,
            "E" => PlacementType::E,
            "F" => PlacementType::F,
            "CUSTOM" => PlacementType::Custom,
            other => return Err(Error::config("placement_type", format!("unknown type `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApNode {
    pub id: usize,
    pub position: Point3,
    /// Azimuth sector served, degrees.
    pub view_deg: f64,
    /// Beam alignment time, s.
    pub alignment_time_s: f64,
    /// Horizontal unit vector at the centre of the view sector.
    pub facing: [f64; 2],
}

impl ApNode {
    /// Whether a point lies inside this AP's azimuth sector.
    pub fn sees(&self, x: f64, y: f64) -> bool {
        if self.view_deg >= 360.0 {
            return true;
        }
        let (vx, vy) = (x - self.position.x, y - self.position.y);
        let n = vx.hypot(vy);
        if n < 1e-12 {
            return true;
        }
        let cos = (vx * self.facing[0] + vy * self.facing[1]) / n;
        cos >= (self.view_deg.to_radians() / 2.0).cos() - 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub placement_type: PlacementType,
    pub nodes: Vec<ApNode>,
    /// Height correction applied to perimeter APs, m.
    pub h_c: f64,
}

impl Constellation {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self, room: &Room) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::config("n_aps", "constellation has no APs"));
        }
        for node in &self.nodes {
            if !room.contains(&node.position) {
                return Err(Error::config(
                    "constellation",
                    format!("AP {} at {:?} lies outside the room", node.id, node.position),
                ));
            }
            if node.view_deg != 180.0 && node.view_deg != 360.0 {
                return Err(Error::config("constellation", format!("AP {} view must be 180 or 360", node.id)));
            }
            if !(node.alignment_time_s > 0.0) {
                return Err(Error::config("constellation", format!("AP {} alignment time must be > 0", node.id)));
            }
        }
        Ok(())
    }

    /// One record per AP: `id,x,y,z,view,alignment_time`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# placement_type={} h_c={}\nid,x,y,z,view,alignment_time\n", self.placement_type, self.h_c);
        for n in &self.nodes {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                n.id, n.position.x, n.position.y, n.position.z, n.view_deg, n.alignment_time_s
            ));
        }
        out
    }

    /// Parses [`Constellation::to_csv`] output or an external layout in the
    /// same columns. Sector orientation is derived from the room.
    pub fn from_csv(text: &str, room: &Room) -> Result<Self> {
        let mut placement_type = PlacementType::Custom;
        let mut h_c = 0.0;
        let mut nodes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("placement_type", v)) => placement_type = v.parse()?,
                        Some(("h_c", v)) => {
                            h_c = v.parse().map_err(|_| Error::config("h_c", format!("bad value `{v}`")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("id") {
                continue;
            }
            let bad = || Error::config("constellation", format!("line {}: `{line}`", lineno + 1));
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let (x, y, z) = (num(cols[1])?, num(cols[2])?, num(cols[3])?);
            nodes.push(ApNode {
                id: cols[0].parse().map_err(|_| bad())?,
                position: Point3::new(x, y, z),
                view_deg: num(cols[4])?,
                alignment_time_s: num(cols[5])?,
                facing: room.inward_facing(x, y),
            });
        }
        let c = Constellation { placement_type, nodes, h_c };
        c.validate(room)?;
        Ok(c)
    }
}

/// Vertical body cylinder standing on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyCylinder {
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
}

fn ceiling_node(id: usize, x: f64, y: f64, z: f64, t_align: f64, room: &Room) -> ApNode {
    ApNode {
        id,
        position: Point3::new(x, y, z),
        view_deg: 360.0,
        alignment_time_s: t_align,
        facing: room.inward_facing(x, y),
    }
}

fn check_t_align(t_align: f64) -> Result<()> {
    if t_align > 0.0 && t_align.is_finite() {
        Ok(())
    } else {
        Err(Error::config("t_align_ms", format!("must be positive, got {t_align}")))
    }
}

pub fn place_type_a(room: &Room, t_align: f64) -> Result<Constellation> {
    room.validate()?;
    check_t_align(t_align)?;
    Ok(Constellation {
        placement_type: PlacementType::A,
        nodes: vec![ceiling_node(0, room.length / 2.0, room.width / 2.0, room.height, t_align, room)],
        h_c: 0.0,
    })
}

/// Grid partition (columns along the length, rows along the width).
fn grid_shape(n: usize) -> Result<(usize, usize)> {
    match n {
        4 => Ok((2, 2)),
        8 => Ok((4, 2)),
        12 => Ok((4, 3)),
        16 => Ok((4, 4)),
        _ => Err(Error::config("n_aps", format!("unsupported AP count {n}; expected 4, 8, 12 or 16"))),
    }
}

fn grid_xy(length: f64, width: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    let (nx, ny) = grid_shape(n)?;
    let mut pts = Vec::with_capacity(n);
    for i in 0..nx {
        for j in 0..ny {
            pts.push(((i as f64 + 0.5) * length / nx as f64, (j as f64 + 0.5) * width / ny as f64));
        }
    }
    Ok(pts)
}

/// Ceiling APs at the cell centres of a 2x2, 4x2, 4x3 or 4x4 partition.
pub fn place_type_b(room: &Room, n: usize, t_align: f64) -> Result<Constellation> {
    room.validate()?;
    check_t_align(t_align)?;
    let nodes = grid_xy(room.length, room.width, n)?
        .into_iter()
        .enumerate()
        .map(|(id, (x, y))| ceiling_node(id, x, y, room.height, t_align, room))
        .collect();
    Ok(Constellation { placement_type: PlacementType::B, nodes, h_c: 0.0 })
}

/// `n / 4` points per wall, equally spaced, walked counter-clockwise from the
/// `y = 0` wall.
fn perimeter_xy(room: &Room, n: usize) -> Result<Vec<(f64, f64)>> {
    if !matches!(n, 4 | 8 | 12 | 16) {
        return Err(Error::config("n_aps", format!("unsupported AP count {n}; expected 4, 8, 12 or 16")));
    }
    let k = n / 4;
    let (l, w) = (room.length, room.width);
    let frac = |i: usize| (i + 1) as f64 / (k + 1) as f64;
    let mut pts = Vec::with_capacity(n);
    pts.extend((0..k).map(|i| (frac(i) * l, 0.0)));
    pts.extend((0..k).map(|i| (l, frac(i) * w)));
    pts.extend((0..k).map(|i| ((1.0 - frac(i)) * l, w)));
    pts.extend((0..k).map(|i| (0.0, (1.0 - frac(i)) * w)));
    Ok(pts)
}

fn perimeter_nodes(room: &Room, n: usize, z: f64, t_align: f64) -> Result<Vec<ApNode>> {
    Ok(perimeter_xy(room, n)?
        .into_iter()
        .enumerate()
        .map(|(id, (x, y))| ApNode {
            id,
            position: Point3::new(x, y, z),
            view_deg: 180.0,
            alignment_time_s: t_align / 2.0,
            facing: room.inward_facing(x, y),
        })
        .collect())
}

/// Wall-mounted APs lowered by `h_c`, facing inward with half the alignment time.
pub fn place_type_c(room: &Room, n: usize, h_c: f64, t_align: f64) -> Result<Constellation> {
    room.validate()?;
    check_t_align(t_align)?;
    if !(h_c >= 0.0 && h_c < room.height) {
        return Err(Error::config("h_c", format!("must be in [0, {}), got {h_c}", room.height)));
    }
    Ok(Constellation {
        placement_type: PlacementType::C,
        nodes: perimeter_nodes(room, n, room.height - h_c, t_align)?,
        h_c,
    })
}

/// Perimeter APs hung 0.5 m above head height.
pub fn place_type_d(room: &Room, n: usize, user_height: f64, t_align: f64) -> Result<Constellation> {
    room.validate()?;
    check_t_align(t_align)?;
    let z = (user_height + 0.5).min(room.height);
    Ok(Constellation {
        placement_type: PlacementType::D,
        nodes: perimeter_nodes(room, n, z, t_align)?,
        h_c: room.height - z,
    })
}

/// Perimeter APs 0.3 m below head height, table-lamp style.
pub fn place_type_e(room: &Room, n: usize, user_height: f64, t_align: f64) -> Result<Constellation> {
    room.validate()?;
    check_t_align(t_align)?;
    let z = (user_height - 0.3).clamp(0.0, room.height);
    Ok(Constellation {
        placement_type: PlacementType::E,
        nodes: perimeter_nodes(room, n, z, t_align)?,
        h_c: room.height - z,
    })
}

/// Side of the square ceiling patch holding a Type F cluster, m.
pub const CLUSTER_SIDE: f64 = 2.0;

/// Grid layout compressed into a [`CLUSTER_SIDE`] patch at the ceiling centre.
pub fn place_type_f(room: &Room, n: usize, t_align: f64) -> Result<Constellation> {
    room.validate()?;
    check_t_align(t_align)?;
    let side_l = CLUSTER_SIDE.min(room.length);
    let side_w = CLUSTER_SIDE.min(room.width);
    let (x0, y0) = ((room.length - side_l) / 2.0, (room.width - side_w) / 2.0);
    let nodes = grid_xy(side_l, side_w, n)?
        .into_iter()
        .enumerate()
        .map(|(id, (x, y))| ceiling_node(id, x0 + x, y0 + y, room.height, t_align, room))
        .collect();
    Ok(Constellation { placement_type: PlacementType::F, nodes, h_c: 0.0 })
}

/// `H (1 - exp(tau (d_B - d_C) / 2))`: how far perimeter APs drop so their
/// illumination matches a ceiling grid.
pub fn height_correction(effective_height: f64, d_b: f64, d_c: f64, tau: f64) -> Result<f64> {
    if !(effective_height > 0.0) {
        return Err(Error::domain("height_correction", format!("H must be > 0, got {effective_height}")));
    }
    if !(d_b > 0.0) {
        return Err(Error::domain("height_correction", format!("d_B must be > 0, got {d_b}")));
    }
    if !(d_c >= d_b) {
        return Err(Error::domain("height_correction", format!("d_C = {d_c} is below d_B = {d_b}")));
    }
    if !(tau >= 0.0) {
        return Err(Error::domain("height_correction", format!("tau must be >= 0, got {tau}")));
    }
    Ok(-effective_height * (tau * (d_b - d_c) / 2.0).exp_m1())
}

/// Mean, over a `grid x grid` lattice of floor cell centres at
/// `device_height`, of the distance to the nearest AP.
pub fn mean_nearest_distance(room: &Room, nodes: &[ApNode], device_height: f64, grid: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..grid {
        let x = (i as f64 + 0.5) * room.length / grid as f64;
        for j in 0..grid {
            let y = (j as f64 + 0.5) * room.width / grid as f64;
            let p = Point3::new(x, y, device_height);
            total += nodes.iter().map(|n| n.position.distance(&p)).fold(f64::INFINITY, f64::min);
        }
    }
    total / (grid * grid) as f64
}

/// Reference distances `(d_B, d_C)` for the height correction: the grid-mean
/// nearest-AP distance to the ceiling grid and to the uncorrected perimeter.
pub fn reference_distances(room: &Room, n: usize, device_height: f64) -> Result<(f64, f64)> {
    reference_distances_with_grid(room, n, device_height, REFERENCE_GRID)
}

pub fn reference_distances_with_grid(room: &Room, n: usize, device_height: f64, grid: usize) -> Result<(f64, f64)> {
    // Alignment time does not affect distances.
    let b = place_type_b(room, n, 1.0)?;
    let c = place_type_c(room, n, 0.0, 1.0)?;
    Ok((
        mean_nearest_distance(room, &b.nodes, device_height, grid),
        mean_nearest_distance(room, &c.nodes, device_height, grid),
    ))
}

/// Height correction for a Type C constellation matched to the Type B grid
/// with the same AP count.
pub fn matched_height_correction(room: &Room, n: usize, device_height: f64, tau: f64) -> Result<f64> {
    let (d_b, d_c) = reference_distances(room, n, device_height)?;
    height_correction(room.height - device_height, d_b, d_c.max(d_b), tau)
}

/// Whether the open segment `a -> b` passes through any body cylinder other
/// than `blockers[exclude]`.
pub fn los_blocked(a: &Point3, b: &Point3, blockers: &[BodyCylinder], exclude: Option<usize>) -> bool {
    blockers
        .iter()
        .enumerate()
        .any(|(i, c)| Some(i) != exclude && segment_hits_cylinder(a, b, c))
}

pub fn segment_hits_cylinder(a: &Point3, b: &Point3, c: &BodyCylinder) -> bool {
    let (dx, dy, dz) = (b.x - a.x, b.y - a.y, b.z - a.z);
    let (fx, fy) = (a.x - c.center[0], a.y - c.center[1]);
    let r2 = c.radius * c.radius;
    let qa = dx * dx + dy * dy;
    let (t0, t1) = if qa < 1e-24 {
        if fx * fx + fy * fy <= r2 {
            (0.0, 1.0)
        } else {
            return false;
        }
    } else {
        let qb = 2.0 * (fx * dx + fy * dy);
        let qc = fx * fx + fy * fy - r2;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return false;
        }
        let s = disc.sqrt();
        ((-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa))
    };
    let lo = t0.max(0.0);
    let hi = t1.min(1.0);
    if lo > hi || hi <= 0.0 || lo >= 1.0 {
        return false;
    }
    let (za, zb) = (a.z + lo * dz, a.z + hi * dz);
    za.min(zb) <= c.height && za.max(zb) >= 0.0
}
