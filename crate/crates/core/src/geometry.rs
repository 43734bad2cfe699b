//! Beam layout, cluster topology and per-trial user placement.
//!
//! Beam centers sit on a triangular lattice (hexagonal cells). Each cluster
//! is a hexagonal "flower" of beams (center plus surrounding rings) and the
//! flowers themselves tile the plane on a coarser triangular lattice. The
//! reference scenario has 19 clusters of 7 beams: a central cluster, a first
//! ring of 6 and a second ring of 12.
//!
//! Cluster and beam indices are zero-based throughout. Beam `b` belongs to
//! cluster `b / beams_per_cluster` and the user scheduled in beam `b` has
//! user index `b`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// GEO altitude above the sub-satellite point, km.
pub const GEO_ALTITUDE_KM: f64 = 35_786.0;

/// Axial unit steps of the triangular lattice, counter-clockwise from +x.
const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Hyper-cluster plan of the 19-cluster scenario (one-based cluster labels).
pub const REFERENCE_HYPER_CLUSTERS: [&[usize]; 7] = [
    &[3, 9, 10],
    &[4, 11, 12],
    &[2, 8, 19],
    &[5, 13, 14],
    &[7, 17, 18],
    &[6, 15, 16],
    &[1],
];

/// Axial lattice coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Axial {
    pub q: i32,
    pub r: i32,
}

impl Axial {
    pub const fn new(q: i32, r: i32) -> Self {
        Axial { q, r }
    }

    fn add(self, o: Axial) -> Axial {
        Axial::new(self.q + o.q, self.r + o.r)
    }

    fn scale(self, k: i32) -> Axial {
        Axial::new(self.q * k, self.r * k)
    }

    /// Rotation by +60 degrees.
    fn rotate60(self) -> Axial {
        Axial::new(-self.r, self.q + self.r)
    }

    /// Hex (lattice) distance to the origin.
    pub fn hex_len(self) -> i32 {
        (self.q.abs() + self.r.abs() + (self.q + self.r).abs()) / 2
    }

    /// Squared Euclidean length in units of the lattice pitch.
    fn len_sqr(self) -> i32 {
        self.q * self.q + self.q * self.r + self.r * self.r
    }

    /// Cartesian position for a lattice with the given pitch.
    pub fn to_xy(self, pitch: f64) -> [f64; 2] {
        let q = self.q as f64;
        let r = self.r as f64;
        [pitch * (q + 0.5 * r), pitch * (0.5 * 3f64.sqrt() * r)]
    }
}

fn direction(i: usize) -> Axial {
    let (q, r) = DIRECTIONS[i % 6];
    Axial::new(q, r)
}

/// Lattice points of a hexagon of the given radius: center first, then each
/// ring starting at `radius * DIRECTIONS[0]` and walking counter-clockwise.
pub fn hex_spiral(radius: u32) -> Vec<Axial> {
    let mut out = vec![Axial::new(0, 0)];
    for ring in 1..=radius as i32 {
        let mut pos = direction(0).scale(ring);
        for side in 0..6 {
            for _ in 0..ring {
                out.push(pos);
                pos = pos.add(direction(side + 2));
            }
        }
    }
    out
}

/// Radius `n` such that `count = 3n(n+1) + 1`, if one exists.
fn hexagonal_radius(count: usize) -> Option<u32> {
    (0u32..)
        .map(|n| (n, 3 * (n as usize) * (n as usize + 1) + 1))
        .take_while(|&(_, c)| c <= count)
        .find(|&(_, c)| c == count)
        .map(|(n, _)| n)
}

/// Frequency colour of a lattice cell under the reuse-4 parity pattern.
pub fn reuse4_colour(a: Axial) -> u8 {
    (a.q.rem_euclid(2) + 2 * a.r.rem_euclid(2)) as u8
}

/// How the layout diameter fixes the beam pitch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeScale {
    /// The outermost beam centers lie on the rim of a disk of this diameter.
    CoverageDisk,
    /// Each hexagonal cell is inscribed in a circle of this diameter, so the
    /// cell corners sit on the rim of the beam footprint.
    #[default]
    BeamFootprint,
}

impl LatticeScale {
    pub fn name(self) -> &'static str {
        match self {
            LatticeScale::CoverageDisk => "coverage-disk",
            LatticeScale::BeamFootprint => "beam-footprint",
        }
    }
}

impl std::str::FromStr for LatticeScale {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coverage-disk" | "coverage" => Ok(LatticeScale::CoverageDisk),
            "beam-footprint" | "beam" => Ok(LatticeScale::BeamFootprint),
            other => Err(SimError::config(format!(
                "unknown lattice scale '{other}' (expected coverage-disk or beam-footprint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Distance between adjacent beam centers, km.
    pub pitch_km: f64,
    /// Layout diameter, read according to `lattice_scale`.
    pub coverage_diameter_km: f64,
    pub lattice_scale: LatticeScale,
    pub beams_per_cluster: usize,
    pub clusters: usize,
    pub beam_axial: Vec<Axial>,
    /// Beam centers on the coverage plane, km.
    pub beam_centers: Vec<[f64; 2]>,
    pub cluster_of_beam: Vec<usize>,
    /// Partition of cluster indices into cooperating groups.
    pub hyper_clusters: Vec<Vec<usize>>,
    pub colour_of_beam: Vec<u8>,
    /// Satellite position, km; the coverage plane is z = 0.
    pub satellite_position: [f64; 3],
}

/// Builds the beam and cluster layout.
///
/// Cluster sizes and counts must be centered hexagonal numbers (1, 7, 19,
/// 37, ...). The beam pitch is chosen so that the outermost beam centers lie
/// on the rim of a disk with the given diameter. With 19 clusters the
/// reference hyper-cluster plan is used; any other cluster count starts with
/// singleton hyper-clusters (see [`Topology::with_hyper_clusters`]).
pub fn build_topology(
    coverage_diameter_km: f64,
    beams_per_cluster: usize,
    clusters: usize,
) -> Result<Topology> {
    build_topology_scaled(
        coverage_diameter_km,
        beams_per_cluster,
        clusters,
        LatticeScale::CoverageDisk,
    )
}

/// Like [`build_topology`], with the diameter read according to `scale`.
pub fn build_topology_scaled(
    coverage_diameter_km: f64,
    beams_per_cluster: usize,
    clusters: usize,
    scale: LatticeScale,
) -> Result<Topology> {
    if !(coverage_diameter_km > 0.0) || !coverage_diameter_km.is_finite() {
        return Err(SimError::config(format!(
            "coverage diameter must be positive, got {coverage_diameter_km}"
        )));
    }
    if beams_per_cluster == 0 || clusters == 0 {
        return Err(SimError::config(
            "beams per cluster and cluster count must be positive",
        ));
    }
    let beam_radius = hexagonal_radius(beams_per_cluster).ok_or_else(|| {
        SimError::config(format!(
            "{beams_per_cluster} beams cannot form a hexagonal cluster"
        ))
    })?;
    let cluster_radius = hexagonal_radius(clusters).ok_or_else(|| {
        SimError::config(format!("{clusters} clusters have no hexagonal arrangement"))
    })?;

    // Translation between neighbouring flowers of radius n: (n+1, n) has
    // squared length 3n^2 + 3n + 1, one lattice cell per beam.
    let n = beam_radius as i32;
    let t1 = Axial::new(n + 1, n);
    let t2 = t1.rotate60();

    let flower = hex_spiral(beam_radius);
    let mut beam_axial = Vec::with_capacity(clusters * beams_per_cluster);
    let mut cluster_of_beam = Vec::with_capacity(clusters * beams_per_cluster);
    for (c, site) in hex_spiral(cluster_radius).into_iter().enumerate() {
        let center = t1.scale(site.q).add(t2.scale(site.r));
        for &offset in &flower {
            beam_axial.push(center.add(offset));
            cluster_of_beam.push(c);
        }
    }

    let max_len = beam_axial.iter().map(|a| a.len_sqr()).max().unwrap_or(0) as f64;
    let pitch_km = match scale {
        LatticeScale::CoverageDisk if max_len > 0.0 => {
            coverage_diameter_km / (2.0 * max_len.sqrt())
        }
        LatticeScale::CoverageDisk => coverage_diameter_km,
        LatticeScale::BeamFootprint => 0.5 * coverage_diameter_km * 3f64.sqrt(),
    };

    let hyper_clusters = if clusters
        == REFERENCE_HYPER_CLUSTERS
            .iter()
            .map(|s| s.len())
            .sum::<usize>()
    {
        REFERENCE_HYPER_CLUSTERS
            .iter()
            .map(|set| set.iter().map(|&label| label - 1).collect())
            .collect()
    } else {
        (0..clusters).map(|c| vec![c]).collect()
    };

    Ok(Topology {
        pitch_km,
        coverage_diameter_km,
        lattice_scale: scale,
        beams_per_cluster,
        clusters,
        beam_centers: beam_axial.iter().map(|a| a.to_xy(pitch_km)).collect(),
        colour_of_beam: beam_axial.iter().map(|&a| reuse4_colour(a)).collect(),
        beam_axial,
        cluster_of_beam,
        hyper_clusters,
        satellite_position: [0.0, 0.0, GEO_ALTITUDE_KM],
    })
}

impl Topology {
    pub fn num_beams(&self) -> usize {
        self.beam_centers.len()
    }

    /// Beam indices of a cluster, in local order.
    pub fn beams_of(&self, cluster: usize) -> std::ops::Range<usize> {
        let k = self.beams_per_cluster;
        cluster * k..(cluster + 1) * k
    }

    /// Hyper-cluster containing the given cluster.
    pub fn hyper_cluster_of(&self, cluster: usize) -> &[usize] {
        self.hyper_clusters
            .iter()
            .find(|set| set.contains(&cluster))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Other clusters in the same hyper-cluster.
    pub fn cooperating_neighbours(&self, cluster: usize) -> Vec<usize> {
        self.hyper_cluster_of(cluster)
            .iter()
            .copied()
            .filter(|&c| c != cluster)
            .collect()
    }

    /// Replaces the hyper-cluster plan; the sets must partition the clusters.
    pub fn with_hyper_clusters(mut self, plan: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; self.clusters];
        for &c in plan.iter().flatten() {
            if c >= self.clusters || std::mem::replace(&mut seen[c], true) {
                return Err(SimError::config(format!(
                    "hyper-cluster plan is not a partition (cluster {c})"
                )));
            }
        }
        if seen.iter().any(|s| !s) || plan.iter().any(Vec::is_empty) {
            return Err(SimError::config(
                "hyper-cluster plan does not cover every cluster",
            ));
        }
        self.hyper_clusters = plan;
        Ok(self)
    }

    /// Pairs of beams whose centers are nearest neighbours on the lattice.
    pub fn adjacent_beam_pairs(&self) -> Vec<(usize, usize)> {
        let index: std::collections::HashMap<Axial, usize> = self
            .beam_axial
            .iter()
            .enumerate()
            .map(|(i, &a)| (a, i))
            .collect();
        let mut pairs = Vec::new();
        for (i, &a) in self.beam_axial.iter().enumerate() {
            for d in 0..3 {
                if let Some(&j) = index.get(&a.add(direction(d))) {
                    pairs.push((i.min(j), i.max(j)));
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    pub fn colour_conflicts(&self) -> usize {
        self.adjacent_beam_pairs()
            .into_iter()
            .filter(|&(i, j)| self.colour_of_beam[i] == self.colour_of_beam[j])
            .count()
    }

    /// Largest distance from a beam center to a point of its hexagonal cell.
    pub fn cell_circumradius_km(&self) -> f64 {
        self.pitch_km / 3f64.sqrt()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(|e| SimError::io(path, e.into()))
    }
}

/// One scheduled user per beam for a single Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDrop {
    /// User positions on the coverage plane, km; entry `b` lies in beam `b`.
    pub user_position: Vec<[f64; 2]>,
    /// Distance from each user to the satellite, km.
    pub slant_range: Vec<f64>,
    /// `off_axis[u * num_beams + b]`: angle at the satellite between the
    /// boresight of beam `b` and the direction of user `u`, radians.
    off_axis: Vec<f64>,
    num_beams: usize,
}

impl UserDrop {
    pub fn num_users(&self) -> usize {
        self.user_position.len()
    }

    pub fn off_axis_angle(&self, beam: usize, user: usize) -> f64 {
        self.off_axis[user * self.num_beams + beam]
    }

    /// Builds a drop from explicit user positions (one per beam).
    pub fn from_positions(topology: &Topology, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != topology.num_beams() {
            return Err(SimError::Inconsistent(format!(
                "{} user positions for {} beams",
                positions.len(),
                topology.num_beams()
            )));
        }
        let sat = topology.satellite_position;
        let to_sat = |p: &[f64; 2]| [p[0] - sat[0], p[1] - sat[1], -sat[2]];
        let beam_dirs: Vec<[f64; 3]> = topology.beam_centers.iter().map(to_sat).collect();

        let nb = topology.num_beams();
        let mut off_axis = Vec::with_capacity(nb * nb);
        let mut slant_range = Vec::with_capacity(nb);
        for p in &positions {
            let u = to_sat(p);
            slant_range.push(norm3(u));
            off_axis.extend(beam_dirs.iter().map(|b| angle_between(*b, u)));
        }
        Ok(UserDrop {
            user_position: positions,
            slant_range,
            off_axis,
            num_beams: nb,
        })
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

// atan2 form stays accurate for the sub-degree angles that matter here.
fn angle_between(a: [f64; 3], b: [f64; 3]) -> f64 {
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    norm3(cross).atan2(dot)
}

/// True if `offset` (relative to a beam center) lies in the hexagonal cell
/// of a lattice with the given pitch.
pub fn in_hex_cell(offset: [f64; 2], pitch: f64) -> bool {
    let half = 0.5 * pitch * (1.0 + 1e-12);
    (0..3).all(|d| {
        let [nx, ny] = direction(d).to_xy(1.0);
        (offset[0] * nx + offset[1] * ny).abs() <= half
    })
}

/// Draws one user uniformly inside every beam's hexagonal cell.
pub fn drop_users(topology: &Topology, rng_seed: u64) -> UserDrop {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pitch = topology.pitch_km;
    let half_w = 0.5 * pitch;
    let half_h = topology.cell_circumradius_km();
    let positions = topology
        .beam_centers
        .iter()
        .map(|c| loop {
            let off = [
                rng.random_range(-half_w..=half_w),
                rng.random_range(-half_h..=half_h),
            ];
            if in_hex_cell(off, pitch) {
                break [c[0] + off[0], c[1] + off[1]];
            }
        })
        .collect();
    UserDrop::from_positions(topology, positions).expect("one position per beam")
}
