//! Large neighbourhood search over trees of Chimera cells.
//!
//! A neighbourhood is a random set of unit cells whose grid adjacency graph
//! is a tree. All spins in those cells are free; every other spin is held at
//! its current value and folded into the fields of its free neighbours. The
//! free problem is solved exactly by dynamic programming from the leaves of
//! the cell tree to its root: a cell enumerates all of its `2^{2K}` states,
//! and passes up, for each state of the parent's facing half, the best it
//! can do. Inter-cell couplers join equal slots of one half only, so every
//! message has `2^K` entries.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chimera::ChimeraTopology;
use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::solvers::{Recorder, SolveOptions, SolveTrajectory};

/// Upper limit on cells per neighbourhood.
pub const MAX_TREE_CELLS: usize = 48;
/// Neighbourhoods without improvement before the search restarts.
pub const STALL_LIMIT: usize = 50;
const MAX_CELL_SIZE: usize = 8;

/// Model nodes arranged by Chimera cell.
#[derive(Clone, Debug)]
pub struct CellLayout {
    rows: usize,
    cols: usize,
    k: usize,
    /// `slots[cell * 2K + half * K + index]`: model node in that position.
    slots: Vec<Option<usize>>,
    present: Vec<u32>,
    cell_of: Vec<usize>,
    intra: Vec<Vec<(usize, usize, f64)>>,
    /// Coupling from slot `(half 0, k)` of a cell to the cell below it.
    down: Vec<Vec<f64>>,
    /// Coupling from slot `(half 1, k)` of a cell to the cell right of it.
    right: Vec<Vec<f64>>,
}

impl CellLayout {
    /// Fails unless every node label and coupler of `model` exists in `topology`.
    pub fn new(model: &IsingModel, topology: &ChimeraTopology) -> Result<Self> {
        let k = topology.cell_size();
        if k > MAX_CELL_SIZE {
            return Err(Error::InvalidTopology(format!(
                "cell size {k} exceeds the supported maximum of {MAX_CELL_SIZE}"
            )));
        }
        let cells = topology.cell_count();
        let width = 2 * k;
        let mut layout = CellLayout {
            rows: topology.rows(),
            cols: topology.cols(),
            k,
            slots: vec![None; cells * width],
            present: vec![0; cells],
            cell_of: vec![0; model.node_count()],
            intra: vec![Vec::new(); cells],
            down: vec![vec![0.0; k]; cells],
            right: vec![vec![0.0; k]; cells],
        };
        for (i, &label) in model.labels().iter().enumerate() {
            if !topology.contains_node(label) {
                return Err(Error::InvalidTopology(format!(
                    "node {label} is not part of the topology"
                )));
            }
            let c = topology.coord(label);
            let cell = c.row * layout.cols + c.col;
            let slot = c.half * k + c.index;
            layout.slots[cell * width + slot] = Some(i);
            layout.present[cell] |= 1 << slot;
            layout.cell_of[i] = cell;
        }
        let labels = model.labels();
        for e in model.edges() {
            let (a, b) = (labels[e.i], labels[e.j]);
            if !topology.contains_edge(a, b) {
                return Err(Error::InvalidTopology(format!(
                    "coupler ({a}, {b}) is not part of the topology"
                )));
            }
            let (ca, cb) = (topology.coord(a), topology.coord(b));
            let (cell_a, cell_b) = (ca.row * layout.cols + ca.col, cb.row * layout.cols + cb.col);
            if cell_a == cell_b {
                layout.intra[cell_a].push((ca.half * k + ca.index, cb.half * k + cb.index, e.coupling));
            } else if ca.half == 0 {
                layout.down[cell_a.min(cell_b)][ca.index] = e.coupling;
            } else {
                layout.right[cell_a.min(cell_b)][ca.index] = e.coupling;
            }
        }
        Ok(layout)
    }

    pub fn cell_count(&self) -> usize {
        self.present.len()
    }

    pub fn cell_size(&self) -> usize {
        self.k
    }

    /// Model nodes in `cell`, in slot order.
    pub fn cell_nodes(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let w = 2 * self.k;
        self.slots[cell * w..(cell + 1) * w].iter().flatten().copied()
    }

    fn grid_neighbors(&self, cell: usize) -> impl Iterator<Item = usize> {
        let (r, c) = (cell / self.cols, cell % self.cols);
        let cols = self.cols;
        let rows = self.rows;
        [
            (r > 0).then(|| cell - cols),
            (r + 1 < rows).then(|| cell + cols),
            (c > 0).then(|| cell - 1),
            (c + 1 < cols).then(|| cell + 1),
        ]
        .into_iter()
        .flatten()
    }

    /// Half of `cell` whose couplers reach the adjacent cell `other`.
    fn facing_half(&self, cell: usize, other: usize) -> usize {
        if cell % self.cols == other % self.cols {
            0
        } else {
            1
        }
    }

    fn link_coupling(&self, a: usize, b: usize, index: usize) -> f64 {
        if self.facing_half(a, b) == 0 {
            self.down[a.min(b)][index]
        } else {
            self.right[a.min(b)][index]
        }
    }

    /// Orders `cells` root first with parent links, or `None` if they do not
    /// form a tree under grid adjacency.
    pub fn tree_order(&self, cells: &[usize]) -> Option<Vec<(usize, Option<usize>)>> {
        let first = *cells.first()?;
        let mut member = vec![false; self.cell_count()];
        for &c in cells {
            if c >= self.cell_count() || member[c] {
                return None;
            }
            member[c] = true;
        }
        let pairs: usize = cells
            .iter()
            .map(|&c| self.grid_neighbors(c).filter(|&n| member[n]).count())
            .sum();
        if pairs / 2 + 1 != cells.len() {
            return None;
        }
        let mut order = vec![(first, None)];
        let mut seen = vec![false; self.cell_count()];
        seen[first] = true;
        let mut head = 0;
        while head < order.len() {
            let (c, _) = order[head];
            for n in self.grid_neighbors(c) {
                if member[n] && !seen[n] {
                    seen[n] = true;
                    order.push((n, Some(head)));
                }
            }
            head += 1;
        }
        (order.len() == cells.len()).then_some(order)
    }

    /// Grows a random tree of non-empty cells, root first, with parent links.
    pub fn random_tree<R: Rng>(&self, rng: &mut R, cap: usize) -> Vec<(usize, Option<usize>)> {
        let nonempty: Vec<usize> = (0..self.cell_count()).filter(|&c| self.present[c] != 0).collect();
        let Some(&root) = nonempty.choose(rng) else {
            return Vec::new();
        };
        let cap = cap.min(nonempty.len()).max(1);
        let mut position = vec![usize::MAX; self.cell_count()];
        let mut touching = vec![0u8; self.cell_count()];
        let mut order = vec![(root, None)];
        position[root] = 0;
        for n in self.grid_neighbors(root) {
            touching[n] += 1;
        }
        let mut frontier = Vec::new();
        while order.len() < cap {
            frontier.clear();
            frontier.extend(nonempty.iter().copied().filter(|&c| position[c] == usize::MAX && touching[c] == 1));
            let Some(&next) = frontier.choose(rng) else {
                break;
            };
            let parent = self
                .grid_neighbors(next)
                .find(|&n| position[n] != usize::MAX)
                .map(|n| position[n]);
            position[next] = order.len();
            order.push((next, parent));
            for n in self.grid_neighbors(next) {
                touching[n] += 1;
            }
        }
        order
    }
}

#[inline]
fn spin(state: u32, slot: usize) -> f64 {
    if state >> slot & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Energy of every term touching a free spin, where free means inside `cells`.
pub fn subproblem_energy(model: &IsingModel, layout: &CellLayout, spins: &[i8], cells: &[usize]) -> f64 {
    let mut free = vec![false; layout.cell_count()];
    for &c in cells {
        free[c] = true;
    }
    let is_free = |i: usize| free[layout.cell_of[i]];
    let mut total = 0.0;
    for e in model.edges() {
        if is_free(e.i) || is_free(e.j) {
            total += e.coupling * f64::from(spins[e.i] * spins[e.j]);
        }
    }
    for (i, h) in model.fields().iter().enumerate() {
        if is_free(i) {
            total += h * f64::from(spins[i]);
        }
    }
    total
}

struct CellTable {
    /// Best cell state for each state of the half facing the parent.
    arg_state: Vec<u32>,
    /// Best facing-half state for each state of the parent's facing half.
    arg_link: Vec<u32>,
    best: Vec<f64>,
    half: usize,
}

/// Exact minimiser of the free problem on a tree of cells.
///
/// Overwrites the spins of the free cells in `spins` with an optimal
/// assignment given the fixed ones and returns the number of work units
/// spent.
pub fn solve_tree(
    model: &IsingModel,
    layout: &CellLayout,
    order: &[(usize, Option<usize>)],
    spins: &mut [i8],
) -> u64 {
    let k = layout.k;
    let w = 2 * k;
    let kmask = (1u32 << k) - 1;
    let mut free = vec![false; layout.cell_count()];
    for &(c, _) in order {
        free[c] = true;
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for (pos, &(_, parent)) in order.iter().enumerate() {
        if let Some(p) = parent {
            children[p].push(pos);
        }
    }

    let mut work = 0u64;
    let mut tables: Vec<Option<CellTable>> = (0..order.len()).map(|_| None).collect();
    let mut root_state = 0u32;
    let mut heff = vec![0.0; w];
    let mut local = vec![f64::INFINITY; 1 << w];

    for pos in (0..order.len()).rev() {
        let (cell, parent) = order[pos];
        let present = layout.present[cell];
        for slot in 0..w {
            heff[slot] = 0.0;
            if let Some(i) = layout.slots[cell * w + slot] {
                let mut f = model.fields()[i];
                for &(j, c) in model.neighbors(i) {
                    if !free[layout.cell_of[j]] {
                        f += c * f64::from(spins[j]);
                    }
                }
                heff[slot] = f;
            }
        }
        let intra = &layout.intra[cell];

        // enumerate subsets of the present slots
        let mut x = 0u32;
        loop {
            let mut e = 0.0;
            for (slot, &h) in heff.iter().enumerate() {
                if present >> slot & 1 == 1 {
                    e += h * spin(x, slot);
                }
            }
            for &(a, b, c) in intra {
                e += c * spin(x, a) * spin(x, b);
            }
            for &ch in &children[pos] {
                let t = tables[ch].as_ref().expect("child solved first");
                e += t.best[((x >> (t.half * k)) & kmask) as usize];
            }
            local[x as usize] = e;
            work += (w + intra.len() + children[pos].len()) as u64;
            if x == present {
                break;
            }
            x = (x.wrapping_sub(present)) & present;
        }

        let Some(ppos) = parent else {
            let mut best = f64::INFINITY;
            let mut x = 0u32;
            loop {
                if local[x as usize] < best {
                    best = local[x as usize];
                    root_state = x;
                }
                if x == present {
                    break;
                }
                x = (x.wrapping_sub(present)) & present;
            }
            continue;
        };

        let pcell = order[ppos].0;
        let half = layout.facing_half(cell, pcell);
        let shift = half * k;
        let mut m = vec![f64::INFINITY; 1 << k];
        let mut arg_state = vec![0u32; 1 << k];
        let mut x = 0u32;
        loop {
            let s = ((x >> shift) & kmask) as usize;
            if local[x as usize] < m[s] {
                m[s] = local[x as usize];
                arg_state[s] = x;
            }
            if x == present {
                break;
            }
            x = (x.wrapping_sub(present)) & present;
        }
        let links: Vec<f64> = (0..k).map(|idx| layout.link_coupling(cell, pcell, idx)).collect();
        let mut best = vec![f64::INFINITY; 1 << k];
        let mut arg_link = vec![0u32; 1 << k];
        for t in 0..(1u32 << k) {
            for s in 0..(1u32 << k) {
                if m[s as usize] == f64::INFINITY {
                    continue;
                }
                let mut e = m[s as usize];
                for (idx, &c) in links.iter().enumerate() {
                    if c != 0.0 {
                        e += c * spin(s, idx) * spin(t, idx);
                    }
                }
                if e < best[t as usize] {
                    best[t as usize] = e;
                    arg_link[t as usize] = s;
                }
            }
        }
        work += (1u64 << (2 * k)) * k as u64;
        tables[pos] = Some(CellTable {
            arg_state,
            arg_link,
            best,
            half,
        });
    }

    let mut states = vec![0u32; order.len()];
    if !order.is_empty() {
        states[0] = root_state;
    }
    for pos in 1..order.len() {
        let parent = order[pos].1.expect("non-root has a parent");
        let t = tables[pos].as_ref().expect("table");
        let facing = (states[parent] >> (t.half * k)) & kmask;
        let s = t.arg_link[facing as usize];
        states[pos] = t.arg_state[s as usize];
    }
    for (pos, &(cell, _)) in order.iter().enumerate() {
        for slot in 0..w {
            if let Some(i) = layout.slots[cell * w + slot] {
                spins[i] = if states[pos] >> slot & 1 == 1 { -1 } else { 1 };
            }
        }
    }
    work
}

/// Exact ground state of a model whose whole cell grid forms a tree
/// (a single row or column of cells).
pub fn solve_exact(model: &IsingModel, topology: &ChimeraTopology) -> Result<Vec<i8>> {
    let layout = CellLayout::new(model, topology)?;
    let cells: Vec<usize> = (0..layout.cell_count()).collect();
    let order = layout.tree_order(&cells).ok_or_else(|| {
        Error::InvalidTopology(format!(
            "a {}x{} cell grid is not a tree",
            topology.rows(),
            topology.cols()
        ))
    })?;
    let mut spins = vec![1; model.node_count()];
    solve_tree(model, &layout, &order, &mut spins);
    Ok(spins)
}

pub fn solve(model: &IsingModel, topology: &ChimeraTopology, opts: &SolveOptions) -> Result<SolveTrajectory> {
    opts.validate()?;
    let layout = CellLayout::new(model, topology)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rec = Recorder::new(model, opts);
    let random = |rng: &mut ChaCha8Rng| -> Vec<i8> {
        (0..model.node_count())
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect()
    };
    let mut spins = random(&mut rng);
    rec.offer(&spins);
    let mut candidate = spins.clone();
    let mut stall = 0;
    let mut restarts = 0u64;
    let mut cells = Vec::new();
    let tol = 1e-12 * model.scale().max(1.0);
    while !rec.done() {
        if stall >= STALL_LIMIT {
            spins = random(&mut rng);
            rec.offer(&spins);
            stall = 0;
            restarts += 1;
            continue;
        }
        let order = layout.random_tree(&mut rng, MAX_TREE_CELLS);
        cells.clear();
        cells.extend(order.iter().map(|&(c, _)| c));
        candidate.copy_from_slice(&spins);
        let work = solve_tree(model, &layout, &order, &mut candidate);
        rec.tick(work + 2 * model.edges().len() as u64);
        let before = subproblem_energy(model, &layout, &spins, &cells);
        let after = subproblem_energy(model, &layout, &candidate, &cells);
        if after <= before {
            std::mem::swap(&mut spins, &mut candidate);
        }
        if after < before - tol {
            rec.offer(&spins);
            stall = 0;
        } else {
            stall += 1;
        }
    }
    Ok(rec.finish("hfs", opts.seed, restarts))
}
