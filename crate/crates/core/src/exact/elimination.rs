//! Exact minimisation by sweeping a frontier across the graph.
//!
//! Variables are added one at a time; a variable leaves the frontier as soon
//! as all of its neighbours have been added, by minimising over its two
//! values. The table over the frontier therefore has `2^F` entries, where
//! `F` is the largest frontier met. On a Chimera grid swept column by
//! column `F` stays near `4 · rows + 5`, so a 4x4-cell graph needs about
//! `2^21` entries.

use crate::error::{Error, Result};
use crate::exact::{Certificate, Method};
use crate::ising::{IsingModel, Spins};

/// Frontiers above this are refused (the table would exceed 2^24 entries).
pub const MAX_FRONTIER: usize = 24;

/// Greedy order that keeps the frontier small: repeatedly add the variable
/// leaving the smallest frontier, preferring ones already tied to it.
pub fn sweep_order(model: &IsingModel) -> (Vec<usize>, usize) {
    let n = model.node_count();
    let mut added = vec![false; n];
    let mut missing: Vec<usize> = (0..n).map(|i| model.neighbors(i).len()).collect();
    let mut links = vec![0usize; n];
    let mut frontier = 0usize;
    let mut widest = 0usize;
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = usize::MAX;
        let mut pick_key = (usize::MAX, 0usize);
        for v in 0..n {
            if added[v] {
                continue;
            }
            let closes = model
                .neighbors(v)
                .iter()
                .filter(|&&(u, _)| added[u] && missing[u] == 1)
                .count();
            let stays = usize::from(missing[v] > 0);
            let size = frontier + stays - closes;
            let key = (size, usize::MAX - links[v]);
            if pick == usize::MAX || key < pick_key {
                pick = v;
                pick_key = key;
            }
        }
        widest = widest.max(frontier + 1);
        frontier = pick_key.0;
        added[pick] = true;
        order.push(pick);
        for &(u, _) in model.neighbors(pick) {
            missing[u] -= 1;
            links[u] += 1;
        }
    }
    (order, widest)
}

struct Elimination {
    var: usize,
    /// Frontier (without `var`) at elimination time; bit `p` of an index is slot `p`.
    others: Vec<usize>,
    /// Bit `k` set means `σ_var = −1` is optimal for frontier state `k`.
    choice: Vec<u64>,
}

#[inline]
fn spin_of(idx: usize, pos: usize) -> f64 {
    if idx >> pos & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Exact ground state; fails when the frontier would exceed `MAX_FRONTIER`.
pub fn eliminate(model: &IsingModel) -> Result<Certificate> {
    let n = model.node_count();
    let (order, widest) = sweep_order(model);
    if widest > MAX_FRONTIER {
        return Err(Error::TooLarge {
            method: "frontier elimination (frontier width)",
            size: widest,
            cap: MAX_FRONTIER,
        });
    }
    let mut added = vec![false; n];
    let mut missing: Vec<usize> = (0..n).map(|i| model.neighbors(i).len()).collect();
    let mut frontier: Vec<usize> = Vec::new();
    let mut table = vec![0.0f64];
    let mut log: Vec<Elimination> = Vec::with_capacity(n);
    let mut slot = vec![usize::MAX; n];

    for &v in &order {
        // add v as the highest bit
        let f = frontier.len();
        let terms: Vec<(usize, f64)> = model
            .neighbors(v)
            .iter()
            .filter(|&&(u, _)| added[u])
            .map(|&(u, c)| (slot[u], c))
            .collect();
        let h = model.fields()[v];
        table.resize(table.len() * 2, 0.0);
        let half = 1usize << f;
        for idx in 0..half {
            let mut lin = h;
            for &(p, c) in &terms {
                lin += c * spin_of(idx, p);
            }
            let base = table[idx];
            table[idx] = base + lin;
            table[idx | half] = base - lin;
        }
        added[v] = true;
        slot[v] = f;
        frontier.push(v);
        for &(u, _) in model.neighbors(v) {
            missing[u] -= 1;
        }

        // drop every frontier variable with no neighbour left to add
        while let Some(p) = frontier.iter().position(|&u| missing[u] == 0) {
            let u = frontier.remove(p);
            slot[u] = usize::MAX;
            for (k, &w) in frontier.iter().enumerate() {
                slot[w] = k;
            }
            let out = table.len() / 2;
            let low = (1usize << p) - 1;
            let mut next = vec![0.0f64; out];
            let mut choice = vec![0u64; out.div_ceil(64)];
            for (k, slot_value) in next.iter_mut().enumerate() {
                let i0 = ((k >> p) << (p + 1)) | (k & low);
                let (a, b) = (table[i0], table[i0 | 1 << p]);
                if b < a {
                    *slot_value = b;
                    choice[k / 64] |= 1 << (k % 64);
                } else {
                    *slot_value = a;
                }
            }
            table = next;
            log.push(Elimination {
                var: u,
                others: frontier.clone(),
                choice,
            });
        }
    }
    debug_assert!(frontier.is_empty() && table.len() == 1);

    let mut spins = vec![0i8; n];
    for e in log.iter().rev() {
        let mut k = 0usize;
        for (p, &w) in e.others.iter().enumerate() {
            if spins[w] < 0 {
                k |= 1 << p;
            }
        }
        spins[e.var] = if e.choice[k / 64] >> (k % 64) & 1 == 1 { -1 } else { 1 };
    }
    let config = Spins::from_vec_unchecked(spins);
    Ok(Certificate {
        optimal_energy: model.energy_of(config.as_slice()),
        optimal_configs: vec![config],
        method: Method::Elimination,
        proof_complete: true,
    })
}
