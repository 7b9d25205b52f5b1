//! Seeded random carpets with per-parent corner-coupling rejection and
//! whole-level connectivity regeneration.

use super::{AffineMap, Cell, CellDomain, IteratedFunctionSystem};
use crate::error::{Error, Result};
use crate::rng::{mix_word, Xoshiro256};
use serde::{Deserialize, Serialize};

const LEVEL_RETRIES: u64 = 1000;
const PARENT_RETRIES: u32 = 10_000;

/// Specification of a random carpet: subdivide into a `j x j` grid and
/// remove `k_m` subsquares per parent at level `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarpetSpec {
    pub grid: usize,
    pub removals_per_level: Vec<usize>,
    pub levels: u32,
    pub seed: u64,
}

impl CarpetSpec {
    pub fn new(grid: usize, removals_per_level: Vec<usize>, levels: u32, seed: u64) -> Result<Self> {
        if grid < 2 {
            return Err(Error::invalid("carpet grid j must be at least 2"));
        }
        if removals_per_level.len() != levels as usize {
            return Err(Error::invalid("need one removal count per level"));
        }
        for &k in &removals_per_level {
            if k >= grid * grid - 1 {
                return Err(Error::invalid("removals per level must satisfy k < j^2 - 1"));
            }
            if grid == 4 && k > 3 {
                return Err(Error::invalid("at j = 4 only k <= 3 is supported"));
            }
        }
        Ok(CarpetSpec { grid, removals_per_level, levels, seed })
    }

    /// Constant removals at every level.
    pub fn constant(grid: usize, k: usize, levels: u32, seed: u64) -> Result<Self> {
        Self::new(grid, vec![k; levels as usize], levels, seed)
    }
}

/// Occupancy of one subdivision level as a dense `j^level`-square bitmap.
struct LevelGrid {
    side: usize,
    present: Vec<bool>,
}

impl LevelGrid {
    fn new(side: usize) -> Self {
        LevelGrid { side, present: vec![false; side * side] }
    }

    #[inline]
    fn get(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.side as i64 || y >= self.side as i64 {
            return false;
        }
        self.present[y as usize * self.side + x as usize]
    }

    #[inline]
    fn set(&mut self, x: usize, y: usize, v: bool) {
        self.present[y * self.side + x] = v;
    }

    /// Corner coupling at lattice vertex `(vx, vy)`: exactly two of the four
    /// surrounding cells present, and those two diagonal to each other.
    fn corner_coupled_at(&self, vx: i64, vy: i64) -> bool {
        let nw = self.get(vx - 1, vy);
        let ne = self.get(vx, vy);
        let sw = self.get(vx - 1, vy - 1);
        let se = self.get(vx, vy - 1);
        let count = nw as u8 + ne as u8 + sw as u8 + se as u8;
        count == 2 && ((nw && se) || (ne && sw))
    }

    fn any_coupling_in(&self, vx0: i64, vy0: i64, vx1: i64, vy1: i64) -> bool {
        for vy in vy0..=vy1 {
            for vx in vx0..=vx1 {
                if self.corner_coupled_at(vx, vy) {
                    return true;
                }
            }
        }
        false
    }

    /// Number of edge-connected components among present cells.
    fn edge_components(&self) -> usize {
        let n = self.side * self.side;
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        let union = |parent: &mut Vec<u32>, a: u32, b: u32| {
            let ra = find(parent, a);
            let rb = find(parent, b);
            if ra != rb {
                parent[ra as usize] = rb;
            }
        };
        for y in 0..self.side {
            for x in 0..self.side {
                if !self.present[y * self.side + x] {
                    continue;
                }
                let id = (y * self.side + x) as u32;
                if x + 1 < self.side && self.present[y * self.side + x + 1] {
                    union(&mut parent, id, id + 1);
                }
                if y + 1 < self.side && self.present[(y + 1) * self.side + x] {
                    union(&mut parent, id, id + self.side as u32);
                }
            }
        }
        let mut roots = std::collections::HashSet::new();
        for y in 0..self.side {
            for x in 0..self.side {
                if self.present[y * self.side + x] {
                    roots.insert(find(&mut parent, (y * self.side + x) as u32));
                }
            }
        }
        roots.len()
    }
}

/// A surviving cell during generation: grid position plus its word.
#[derive(Clone)]
struct GenCell {
    x: usize,
    y: usize,
    word: Vec<u8>,
}

/// Generates a random carpet. Deterministic given the seed: every parent
/// square draws from its own stream derived from (seed, parent word, level
/// attempt), so regenerating any subtree with the same seed reproduces the
/// same choices.
pub fn random_carpet(spec: &CarpetSpec) -> Result<CellDomain> {
    let validated = CarpetSpec::new(spec.grid, spec.removals_per_level.clone(), spec.levels, spec.seed)?;
    let mut cells = vec![GenCell { x: 0, y: 0, word: Vec::new() }];
    for level in 1..=validated.levels {
        cells = generate_level(&validated, &cells, level)?;
    }
    finish_domain(&validated, cells)
}

/// Re-randomizes levels `restart_level..` of a random carpet with a new
/// seed, retaining the structure above. With the original seed this
/// reproduces the original carpet exactly.
pub fn bifurcate(carpet: &CellDomain, restart_level: u32, seed: u64) -> Result<CellDomain> {
    let spec = carpet
        .carpet_spec
        .as_ref()
        .ok_or_else(|| Error::invalid("bifurcate requires a random-carpet domain"))?;
    if restart_level < 1 || restart_level > carpet.level {
        return Err(Error::invalid(format!(
            "restart level {restart_level} out of range 1..={}",
            carpet.level
        )));
    }
    let keep_depth = (restart_level - 1) as usize;
    // Distinct word prefixes of the kept depth, in lex order.
    let mut kept: Vec<Vec<u8>> = carpet.cells.iter().map(|c| c.word[..keep_depth].to_vec()).collect();
    kept.sort();
    kept.dedup();

    let new_spec = CarpetSpec { seed, ..spec.clone() };
    let mut cells: Vec<GenCell> = kept
        .into_iter()
        .map(|word| {
            let (x, y) = word_to_position(spec.grid, &word);
            GenCell { x, y, word }
        })
        .collect();
    for level in restart_level..=carpet.level {
        cells = generate_level(&new_spec, &cells, level)?;
    }
    finish_domain(&new_spec, cells)
}

fn word_to_position(grid: usize, word: &[u8]) -> (usize, usize) {
    let mut x = 0usize;
    let mut y = 0usize;
    for &d in word {
        x = x * grid + (d as usize % grid);
        y = y * grid + (d as usize / grid);
    }
    (x, y)
}

/// Generates one subdivision level, with corner-coupling rejection per
/// parent and whole-level regeneration when the level comes out
/// edge-disconnected.
fn generate_level(spec: &CarpetSpec, parents: &[GenCell], level: u32) -> Result<Vec<GenCell>> {
    let j = spec.grid;
    let k = spec.removals_per_level[(level - 1) as usize];
    let side = j.pow(level);
    'attempt: for attempt in 0..LEVEL_RETRIES {
        let salt = (level as u64) << 32 | attempt;
        let mut grid = LevelGrid::new(side);
        // Children of every surviving parent start out present; parents are
        // then processed one at a time in word order, so squares of not yet
        // processed parents count as present in the coupling checks.
        for p in parents {
            for dy in 0..j {
                for dx in 0..j {
                    grid.set(p.x * j + dx, p.y * j + dy, true);
                }
            }
        }
        let mut survivors: Vec<GenCell> = Vec::with_capacity(parents.len() * (j * j - k));
        for p in parents {
            let mut rng = Xoshiro256::seed_from_u64(mix_word(spec.seed, &p.word, salt));
            let bx = (p.x * j) as i64;
            let by = (p.y * j) as i64;
            let mut accepted: Option<Vec<usize>> = None;
            for _ in 0..PARENT_RETRIES {
                let removed = rng.sample_distinct(j * j, k);
                for &r in &removed {
                    grid.set(p.x * j + r % j, p.y * j + r / j, false);
                }
                if grid.any_coupling_in(bx, by, bx + j as i64, by + j as i64) {
                    for &r in &removed {
                        grid.set(p.x * j + r % j, p.y * j + r / j, true);
                    }
                } else {
                    accepted = Some(removed);
                    break;
                }
            }
            let removed = accepted.ok_or_else(|| {
                Error::numerical(format!(
                    "corner-coupling rejection exhausted {PARENT_RETRIES} draws at level {level}; \
                     removal count k = {k} is too large for grid j = {j}"
                ))
            })?;
            for d in 0..j * j {
                if removed.binary_search(&d).is_err() {
                    let mut word = p.word.clone();
                    word.push(d as u8);
                    survivors.push(GenCell { x: p.x * j + d % j, y: p.y * j + d / j, word });
                }
            }
        }
        if grid.edge_components() != 1 {
            continue 'attempt;
        }
        survivors.sort_by(|a, b| a.word.cmp(&b.word));
        return Ok(survivors);
    }
    Err(Error::numerical(format!(
        "level {level} stayed edge-disconnected after {LEVEL_RETRIES} regenerations"
    )))
}

fn finish_domain(spec: &CarpetSpec, cells: Vec<GenCell>) -> Result<CellDomain> {
    let j = spec.grid;
    let full_ifs: Vec<AffineMap> = (0..j * j)
        .map(|d| {
            AffineMap::scale_translate(1.0 / j as f64, [(d % j) as f64 / j as f64, (d / j) as f64 / j as f64])
        })
        .collect::<Result<Vec<_>>>()?;
    let ifs = IteratedFunctionSystem::new(full_ifs, "random_carpet")?;
    let side = j.pow(spec.levels) as f64;
    let cells = cells
        .into_iter()
        .map(|c| {
            let x0 = c.x as f64 / side;
            let y0 = c.y as f64 / side;
            let s = 1.0 / side;
            Cell {
                polygon: vec![[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]],
                word: c.word,
            }
        })
        .collect();
    Ok(CellDomain {
        level: spec.levels,
        base: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        cells,
        ifs,
        carpet_spec: Some(spec.clone()),
    })
}
