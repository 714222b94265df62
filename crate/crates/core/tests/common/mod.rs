#![allow(dead_code)]

use pilattice::{CrtMap, LinearCode, MapKind, MultilevelLattice, PrimePower, PrimeTower};
use proptest::prelude::*;

pub const TOWERS: &[&[(u64, u32)]] = &[
    &[(2, 1)],
    &[(3, 1)],
    &[(2, 1), (3, 1)],
    &[(3, 1), (5, 1)],
    &[(2, 2), (3, 1)],
    &[(2, 1), (5, 1)],
];

pub fn tower(levels: &[(u64, u32)]) -> PrimeTower {
    PrimeTower::new(levels.iter().map(|&(p, e)| PrimePower::new(p, e)).collect()).unwrap()
}

/// Small random lattices: tower, map kind, dimension and code dimensions.
pub fn arb_lattice() -> impl Strategy<Value = MultilevelLattice> {
    (0..TOWERS.len(), any::<bool>(), 1usize..=3, any::<u64>()).prop_flat_map(|(t, ring, n, seed)| {
        let levels = TOWERS[t];
        proptest::collection::vec(0..=n, levels.len()).prop_map(move |ks| {
            let tw = tower(levels);
            let kind = if ring { MapKind::RingIso } else { MapKind::ZModuleIso };
            let codes = tw
                .moduli()
                .iter()
                .zip(&ks)
                .enumerate()
                .map(|(l, (&m, &k))| LinearCode::random(n, k, m, seed.wrapping_add(l as u64)).unwrap())
                .collect();
            MultilevelLattice::new(codes, CrtMap::new(tw, kind)).unwrap()
        })
    })
}

/// Every integer point of the box `[-r, r)^n` shifted by `base`.
pub fn box_points(base: &[i64], r: i64) -> Vec<Vec<i64>> {
    let n = base.len();
    let mut out = Vec::new();
    let mut off = vec![-r; n];
    loop {
        out.push(base.iter().zip(&off).map(|(b, o)| b + o).collect());
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            off[i] += 1;
            if off[i] < r {
                break;
            }
            off[i] = -r;
            i += 1;
        }
    }
}

/// Membership straight from the definition: some level codewords map to
/// `x mod q`.
pub fn member_by_definition(lat: &MultilevelLattice, x: &[i64]) -> bool {
    let q = lat.q() as i64;
    let target: Vec<u64> = x.iter().map(|v| v.rem_euclid(q) as u64).collect();
    let books: Vec<&[Vec<u64>]> = lat.codes().iter().map(|c| c.codewords().unwrap()).collect();
    let mut idx = vec![0usize; books.len()];
    loop {
        let words: Vec<&[u64]> = books.iter().zip(&idx).map(|(b, &i)| b[i].as_slice()).collect();
        if lat.map().forward_words(&words) == target {
            return true;
        }
        let mut l = 0;
        loop {
            if l == idx.len() {
                return false;
            }
            idx[l] += 1;
            if idx[l] < books[l].len() {
                break;
            }
            idx[l] = 0;
            l += 1;
        }
    }
}
