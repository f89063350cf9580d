//! Deterministic generators for the four benchmark map families.
//!
//! Layouts are parameterized from verbal family descriptions:
//!
//! * `drop_region`: border walls, 2-4 labeled drop zones, sparse rectangular
//!   blocks up to a target obstacle fraction.
//! * `conveyor`: 2-3 long horizontal belts crossing the map, each with one or
//!   two crossing gaps.
//! * `room`: 2x2 or 3x3 rooms; every shared wall has a doorway.
//! * `shelf`: a regular grid of shelf blocks separated by aisles of at least
//!   `min_aisle` cells.
//!
//! With `ood` set, one label gets a second instance sealed inside a closed
//! obstacle ring.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{MapError, SemanticRegion, WorldMap, DEFAULT_GRID, DEFAULT_WORLD_SIZE};

pub const LABEL_VOCABULARY: &[&str] = &[
    "apple",
    "basketball",
    "box",
    "dock",
    "crate",
    "pallet",
    "bin",
    "cart",
    "charger",
    "table",
    "plant",
    "ladder",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapFamily {
    DropRegion,
    Conveyor,
    Room,
    Shelf,
}

impl MapFamily {
    pub const ALL: [MapFamily; 4] = [
        MapFamily::DropRegion,
        MapFamily::Conveyor,
        MapFamily::Room,
        MapFamily::Shelf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapFamily::DropRegion => "drop_region",
            MapFamily::Conveyor => "conveyor",
            MapFamily::Room => "room",
            MapFamily::Shelf => "shelf",
        }
    }

    fn salt(self) -> u64 {
        match self {
            MapFamily::DropRegion => 0x1d0f_0001,
            MapFamily::Conveyor => 0x1d0f_0002,
            MapFamily::Room => 0x1d0f_0003,
            MapFamily::Shelf => 0x1d0f_0004,
        }
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapFamily {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "drop_region" | "drop" => Ok(MapFamily::DropRegion),
            "conveyor" => Ok(MapFamily::Conveyor),
            "room" => Ok(MapFamily::Room),
            "shelf" => Ok(MapFamily::Shelf),
            other => Err(GenError::Params(format!("unknown map family {other:?}"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error("generation failed: {0}")]
    Failed(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Generator knobs. Lengths are in cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub grid: usize,
    pub world_size: f64,
    /// Inclusive range for the number of labeled regions.
    pub regions: (usize, usize),
    /// Inclusive range for a region's side length.
    pub region_size: (usize, usize),
    /// Free cells kept around every region.
    pub region_margin: usize,
    pub wall_thickness: usize,
    /// Target obstacle fraction range for `drop_region` (border included).
    pub obstacle_fraction: (f64, f64),
    /// Inclusive range for `drop_region` block side length.
    pub block_size: (usize, usize),
    /// Minimum free gap between `drop_region` blocks and other obstacles.
    pub block_clearance: usize,
    /// Inclusive range for `conveyor` belt-gap width.
    pub belt_gap: (usize, usize),
    /// Inclusive range for `room` doorway width.
    pub door_width: (usize, usize),
    /// Minimum `shelf` aisle width.
    pub min_aisle: usize,
    /// Seal a duplicate instance of one label behind an obstacle ring.
    pub ood: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        Self::for_grid(DEFAULT_GRID)
    }
}

impl GenParams {
    /// Defaults tuned on a 128-cell grid, scaled to `grid`.
    pub fn for_grid(grid: usize) -> Self {
        let s = |cells: usize| ((cells * grid) as f64 / 128.0).round().max(1.0) as usize;
        Self {
            grid,
            world_size: DEFAULT_WORLD_SIZE,
            regions: (3, 4),
            region_size: (s(16), s(22)),
            region_margin: s(3),
            wall_thickness: s(2).max(1),
            obstacle_fraction: (0.08, 0.16),
            block_size: (s(6), s(14)),
            block_clearance: s(8),
            belt_gap: (s(14), s(20)),
            door_width: (s(12), s(18)),
            min_aisle: s(14),
            ood: false,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Params(m.to_string()));
        if self.grid < 32 {
            return bad("grid must be at least 32 cells");
        }
        if !(self.world_size > 0.0) {
            return bad("world_size must be positive");
        }
        let ranges = [
            ("regions", self.regions),
            ("region_size", self.region_size),
            ("block_size", self.block_size),
            ("belt_gap", self.belt_gap),
            ("door_width", self.door_width),
        ];
        for (name, (lo, hi)) in ranges {
            if lo == 0 || lo > hi {
                return Err(GenError::Params(format!("{name} range ({lo}, {hi}) is invalid")));
            }
        }
        let (f0, f1) = self.obstacle_fraction;
        if !(0.0..1.0).contains(&f0) || !(f0..1.0).contains(&f1) {
            return Err(GenError::Params(format!(
                "obstacle_fraction range ({f0}, {f1}) must satisfy 0 <= min <= max < 1"
            )));
        }
        if self.min_aisle == 0 || self.wall_thickness == 0 {
            return bad("min_aisle and wall_thickness must be positive");
        }
        if self.region_size.0 > self.grid / 2 {
            return bad("regions larger than half the grid leave no room");
        }
        Ok(())
    }
}

struct Canvas {
    n: usize,
    occ: Vec<bool>,
    regions: Vec<SemanticRegion>,
    /// Cells reserved for regions and their margins.
    reserved: Vec<bool>,
}

impl Canvas {
    fn new(n: usize) -> Self {
        Self {
            n,
            occ: vec![false; n * n],
            regions: Vec::new(),
            reserved: vec![false; n * n],
        }
    }

    fn fill(&mut self, c0: usize, r0: usize, w: usize, h: usize) {
        for r in r0..(r0 + h).min(self.n) {
            for c in c0..(c0 + w).min(self.n) {
                self.occ[r * self.n + c] = true;
            }
        }
    }

    fn clear(&mut self, c0: usize, r0: usize, w: usize, h: usize) {
        for r in r0..(r0 + h).min(self.n) {
            for c in c0..(c0 + w).min(self.n) {
                self.occ[r * self.n + c] = false;
            }
        }
    }

    /// True when the rectangle grown by `pad` lies inside the grid and
    /// touches no obstacle or reserved cell.
    fn rect_clear(&self, c0: usize, r0: usize, w: usize, h: usize, pad: usize) -> bool {
        if c0 < pad || r0 < pad || c0 + w + pad > self.n || r0 + h + pad > self.n {
            return false;
        }
        for r in r0 - pad..r0 + h + pad {
            for c in c0 - pad..c0 + w + pad {
                let i = r * self.n + c;
                if self.occ[i] || self.reserved[i] {
                    return false;
                }
            }
        }
        true
    }

    /// Like `rect_clear` but the padding may extend past the grid border or
    /// overlap obstacles; only reserved cells are forbidden there.
    fn rect_free_with_margin(&self, c0: usize, r0: usize, s: usize, margin: usize) -> bool {
        if c0 + s > self.n || r0 + s > self.n {
            return false;
        }
        let lo_c = c0.saturating_sub(margin);
        let lo_r = r0.saturating_sub(margin);
        let hi_c = (c0 + s + margin).min(self.n);
        let hi_r = (r0 + s + margin).min(self.n);
        for r in lo_r..hi_r {
            for c in lo_c..hi_c {
                let i = r * self.n + c;
                if self.occ[i] || self.reserved[i] {
                    return false;
                }
            }
        }
        true
    }

    fn reserve(&mut self, c0: usize, r0: usize, w: usize, h: usize, pad: usize) {
        let lo_c = c0.saturating_sub(pad);
        let lo_r = r0.saturating_sub(pad);
        for r in lo_r..(r0 + h + pad).min(self.n) {
            for c in lo_c..(c0 + w + pad).min(self.n) {
                self.reserved[r * self.n + c] = true;
            }
        }
    }

    fn free_count(&self) -> usize {
        self.occ.iter().filter(|o| !**o).count()
    }

    fn obstacle_fraction(&self) -> f64 {
        1.0 - self.free_count() as f64 / self.occ.len() as f64
    }

    /// Size of the free 4-connected component containing `start`.
    fn component_size(&self, start: usize) -> usize {
        let n = self.n;
        let mut seen = vec![false; n * n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 0;
        while let Some(i) = queue.pop_front() {
            count += 1;
            let (c, r) = (i % n, i / n);
            let mut push = |j: usize| {
                if !self.occ[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if c > 0 {
                push(i - 1);
            }
            if c + 1 < n {
                push(i + 1);
            }
            if r > 0 {
                push(i - n);
            }
            if r + 1 < n {
                push(i + n);
            }
        }
        count
    }

    fn first_free(&self) -> Option<usize> {
        self.occ.iter().position(|o| !o)
    }

    fn connected(&self) -> bool {
        match self.first_free() {
            Some(i) => self.component_size(i) == self.free_count(),
            None => false,
        }
    }

    /// Places up to `count` square regions with labels from `labels`.
    fn place_regions(
        &mut self,
        rng: &mut ChaCha8Rng,
        labels: &[String],
        params: &GenParams,
        min_count: usize,
    ) -> Result<(), GenError> {
        let (smin, smax) = params.region_size;
        let floor = (params.grid * 6 / 128).max(2);
        let margin = params.region_margin;
        for label in labels {
            let mut size = rng.random_range(smin..=smax);
            let mut placed = false;
            while !placed {
                for _ in 0..400 {
                    let c0 = rng.random_range(0..=self.n - size);
                    let r0 = rng.random_range(0..=self.n - size);
                    if self.rect_free_with_margin(c0, r0, size, margin) {
                        self.regions
                            .push(SemanticRegion::rect(label.clone(), c0, r0, size, size));
                        // keep other regions at least two margins away
                        self.reserve(c0, r0, size, size, 2 * margin);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    if size <= floor {
                        break;
                    }
                    size = (size * 3 / 4).max(floor);
                }
            }
            if !placed {
                break;
            }
        }
        if self.regions.len() < min_count {
            return Err(GenError::Failed(format!(
                "placed only {} of {} regions",
                self.regions.len(),
                min_count
            )));
        }
        Ok(())
    }
}

fn pick_labels(rng: &mut ChaCha8Rng, params: &GenParams) -> Vec<String> {
    let count = rng.random_range(params.regions.0..=params.regions.1);
    let mut vocab: Vec<&str> = LABEL_VOCABULARY.to_vec();
    vocab.shuffle(rng);
    let mut labels: Vec<String> = vocab.iter().take(count).map(|s| s.to_string()).collect();
    // vocabulary is finite; extend deterministically past it
    for i in labels.len()..count {
        labels.push(format!("goal{i}"));
    }
    labels
}

fn border(canvas: &mut Canvas, t: usize) {
    let n = canvas.n;
    canvas.fill(0, 0, n, t);
    canvas.fill(0, n - t, n, t);
    canvas.fill(0, 0, t, n);
    canvas.fill(n - t, 0, t, n);
}

fn drop_region(canvas: &mut Canvas, rng: &mut ChaCha8Rng, params: &GenParams) -> Result<(), GenError> {
    border(canvas, params.wall_thickness);
    let labels = pick_labels(rng, params);
    canvas.place_regions(rng, &labels, params, params.regions.0)?;
    let (f0, f1) = params.obstacle_fraction;
    let target = rng.random_range(f0..=f1);
    let (bmin, bmax) = params.block_size;
    let clearance = params.block_clearance;
    let mut attempts = 0;
    while canvas.obstacle_fraction() < target {
        attempts += 1;
        if attempts > 20_000 {
            break;
        }
        let w = rng.random_range(bmin..=bmax);
        let h = rng.random_range(bmin..=bmax);
        if w + 2 * clearance >= canvas.n || h + 2 * clearance >= canvas.n {
            continue;
        }
        let c0 = rng.random_range(clearance..canvas.n - w - clearance);
        let r0 = rng.random_range(clearance..canvas.n - h - clearance);
        if !canvas.rect_clear(c0, r0, w, h, clearance) {
            continue;
        }
        canvas.fill(c0, r0, w, h);
        if !canvas.connected() {
            canvas.clear(c0, r0, w, h);
        }
    }
    if canvas.obstacle_fraction() < f0 {
        return Err(GenError::Failed(format!(
            "obstacle fraction {:.3} below requested minimum {f0}",
            canvas.obstacle_fraction()
        )));
    }
    Ok(())
}

fn conveyor(canvas: &mut Canvas, rng: &mut ChaCha8Rng, params: &GenParams) -> Result<(), GenError> {
    let n = canvas.n;
    let belts = rng.random_range(2..=3usize);
    let scale = n as f64 / 128.0;
    let tmin = (6.0 * scale).round().max(1.0) as usize;
    let tmax = (10.0 * scale).round().max(tmin as f64) as usize;
    let (gmin, gmax) = params.belt_gap;
    let jitter = (4.0 * scale).round() as i64;
    for b in 0..belts {
        let thick = rng.random_range(tmin..=tmax);
        let center = (n * (b + 1)) as f64 / (belts + 1) as f64;
        let offset = rng.random_range(-jitter..=jitter) as f64;
        let r0 = (center + offset - thick as f64 / 2.0).round().max(0.0) as usize;
        canvas.fill(0, r0, n, thick);
        let gaps = rng.random_range(1..=2usize);
        // split the belt into `gaps` equal spans and open one gap in each
        let span = n / gaps;
        for g in 0..gaps {
            let w = rng.random_range(gmin..=gmax).min(span.saturating_sub(2).max(1));
            let lo = g * span + 1;
            let hi = ((g + 1) * span).saturating_sub(w + 1).max(lo);
            let c0 = rng.random_range(lo..=hi);
            canvas.clear(c0, r0, w, thick);
        }
    }
    if !canvas.connected() {
        return Err(GenError::Failed("conveyor layout is disconnected".into()));
    }
    let labels = pick_labels(rng, params);
    canvas.place_regions(rng, &labels, params, params.regions.0)
}

fn room(canvas: &mut Canvas, rng: &mut ChaCha8Rng, params: &GenParams) -> Result<(), GenError> {
    let n = canvas.n;
    let t = params.wall_thickness;
    let k: usize = if rng.random_bool(0.5) { 2 } else { 3 };
    border(canvas, t);
    let lines: Vec<usize> = (1..k).map(|i| n * i / k - t / 2).collect();
    for &p in &lines {
        canvas.fill(p, 0, t, n);
        canvas.fill(0, p, n, t);
    }
    // boundaries of the room spans along one axis, in cells
    let mut bounds = vec![t];
    for &p in &lines {
        bounds.push(p);
        bounds.push(p + t);
    }
    bounds.push(n - t);
    let spans: Vec<(usize, usize)> = bounds.chunks(2).map(|c| (c[0], c[1])).collect();
    let (dmin, dmax) = params.door_width;
    let inset = (params.grid * 4 / 128).max(1);
    for &p in &lines {
        for &(lo, hi) in &spans {
            let len = hi - lo;
            let w = rng.random_range(dmin..=dmax).min(len.saturating_sub(2 * inset).max(1));
            let start_hi = (hi - inset).saturating_sub(w).max(lo + inset);
            // vertical wall at column p: door along rows
            let r0 = rng.random_range(lo + inset..=start_hi);
            canvas.clear(p, r0, t, w);
            // horizontal wall at row p: door along columns
            let c0 = rng.random_range(lo + inset..=start_hi);
            canvas.clear(c0, p, w, t);
        }
    }
    if !canvas.connected() {
        return Err(GenError::Failed("room layout is disconnected".into()));
    }
    let labels = pick_labels(rng, params);
    canvas.place_regions(rng, &labels, params, params.regions.0)
}

fn shelf(canvas: &mut Canvas, rng: &mut ChaCha8Rng, params: &GenParams) -> Result<(), GenError> {
    let n = canvas.n;
    let scale = n as f64 / 128.0;
    let aisle = rng.random_range(params.min_aisle..=params.min_aisle + (4.0 * scale).round() as usize);
    let thick = rng.random_range((6.0 * scale).round().max(1.0) as usize..=(9.0 * scale).round().max(1.0) as usize);
    let length = rng.random_range((22.0 * scale).round() as usize..=(34.0 * scale).round() as usize);
    if aisle + thick + aisle > n || aisle + length + aisle > n {
        return Err(GenError::Params(format!(
            "min_aisle {} leaves no room for shelves on a {n}-cell grid",
            params.min_aisle
        )));
    }
    let rows = (n - aisle) / (thick + aisle);
    let cols = (n - aisle) / (length + aisle);
    let used_h = rows * (thick + aisle) + aisle;
    let used_w = cols * (length + aisle) + aisle;
    let off_r = (n - used_h) / 2;
    let off_c = (n - used_w) / 2;
    for i in 0..rows {
        for j in 0..cols {
            let r0 = off_r + aisle + i * (thick + aisle);
            let c0 = off_c + aisle + j * (length + aisle);
            canvas.fill(c0, r0, length, thick);
        }
    }
    let labels = pick_labels(rng, params);
    canvas.place_regions(rng, &labels, params, params.regions.0)
}

/// Seals a new instance of `label` inside a closed ring.
fn seal_instance(canvas: &mut Canvas, rng: &mut ChaCha8Rng, label: &str, params: &GenParams) -> Result<(), GenError> {
    let scale = params.grid as f64 / 128.0;
    let gap = (3.0 * scale).round().max(1.0) as usize;
    let ring = (3.0 * scale).round().max(1.0) as usize;
    let outside = params.region_margin.max(1) + (4.0 * scale).round() as usize;
    let mut size = (10.0 * scale).round().max(2.0) as usize;
    let footprint_unreserved = |canvas: &Canvas, c0: usize, r0: usize, foot: usize| {
        (r0..r0 + foot).all(|r| (c0..c0 + foot).all(|c| !canvas.reserved[r * canvas.n + c]))
    };
    let mut strict = true;
    loop {
        let foot = size + 2 * (gap + ring);
        for _ in 0..3000 {
            if foot + 2 * outside >= canvas.n {
                break;
            }
            let c0 = rng.random_range(outside..canvas.n - foot - outside);
            let r0 = rng.random_range(outside..canvas.n - foot - outside);
            // strict placement keeps open space around the ring; the fallback
            // lets the ring overlap existing obstacles
            let ok = if strict {
                canvas.rect_clear(c0, r0, foot, foot, outside)
            } else {
                footprint_unreserved(canvas, c0, r0, foot)
            };
            if !ok {
                continue;
            }
            let saved = canvas.occ.clone();
            canvas.fill(c0, r0, foot, foot);
            canvas.clear(c0 + ring, r0 + ring, foot - 2 * ring, foot - 2 * ring);
            let inner_c = c0 + ring + gap;
            let inner_r = r0 + ring + gap;
            // exterior must remain one component apart from the pocket
            let pocket = (foot - 2 * ring) * (foot - 2 * ring);
            let outside_cell = canvas.regions[0].cells[0];
            let exterior = canvas.component_size(outside_cell.row * canvas.n + outside_cell.col);
            if exterior + pocket == canvas.free_count() {
                canvas
                    .regions
                    .push(SemanticRegion::rect(label, inner_c, inner_r, size, size));
                canvas.reserve(c0, r0, foot, foot, 0);
                return Ok(());
            }
            canvas.occ = saved;
        }
        if strict {
            strict = false;
            continue;
        }
        if size <= 2 {
            return Err(GenError::Failed("no room for a sealed instance".into()));
        }
        size = size * 3 / 4;
    }
}

/// Deterministic map for `(family, seed, params)`.
pub fn generate_map(family: MapFamily, seed: u64, params: &GenParams) -> Result<WorldMap, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ family.salt());
    let mut canvas = Canvas::new(params.grid);
    match family {
        MapFamily::DropRegion => drop_region(&mut canvas, &mut rng, params)?,
        MapFamily::Conveyor => conveyor(&mut canvas, &mut rng, params)?,
        MapFamily::Room => room(&mut canvas, &mut rng, params)?,
        MapFamily::Shelf => shelf(&mut canvas, &mut rng, params)?,
    }
    if canvas.free_count() == 0 {
        return Err(GenError::Failed("no free space".into()));
    }
    if params.ood {
        let label = canvas.regions[0].label.clone();
        seal_instance(&mut canvas, &mut rng, &label, params)?;
    }
    let name = if params.ood {
        format!("{family}-{seed}-ood")
    } else {
        format!("{family}-{seed}")
    };
    Ok(WorldMap::new(
        name,
        params.grid,
        params.grid,
        (params.world_size, params.world_size),
        canvas.occ,
        canvas.regions,
    )?)
}
