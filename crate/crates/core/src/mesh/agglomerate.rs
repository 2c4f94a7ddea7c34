use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_centroid_star_shaped, is_simple, signed_area, FaceKind, PolyMesh, Point};
use crate::error::{Error, Result};

/// Result of [`agglomerate`].
#[derive(Debug, Clone)]
pub struct Agglomeration {
    pub mesh: PolyMesh,
    /// False when no legal merge remained before the target count.
    pub reached_target: bool,
}

/// Merges the loops of two elements across their shared edges. Returns
/// `None` unless the union is a single simple loop.
fn merge_loops(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let edges = |lp: &[usize]| -> Vec<(usize, usize)> {
        (0..lp.len()).map(|i| (lp[i], lp[(i + 1) % lp.len()])).collect()
    };
    let ea = edges(a);
    let eb = edges(b);
    let shared = |e: &(usize, usize), other: &[(usize, usize)]| other.contains(&(e.1, e.0));
    if !ea.iter().any(|e| shared(e, &eb)) {
        return None;
    }
    let kept: Vec<(usize, usize)> = ea
        .iter()
        .filter(|e| !shared(e, &eb))
        .chain(eb.iter().filter(|e| !shared(e, &ea)))
        .copied()
        .collect();
    if kept.len() < 3 {
        return None;
    }
    let mut next: HashMap<usize, usize> = HashMap::with_capacity(kept.len());
    for &(s, t) in &kept {
        if next.insert(s, t).is_some() {
            // pinch vertex
            return None;
        }
    }
    let start = kept[0].0;
    let mut lp = vec![start];
    let mut v = next[&start];
    while v != start {
        if lp.len() > kept.len() {
            return None;
        }
        lp.push(v);
        v = *next.get(&v)?;
    }
    if lp.len() != kept.len() {
        // more than one boundary loop: the union has a hole
        return None;
    }
    Some(lp)
}

/// Greedily merges neighbouring elements until `target_elements` remain.
///
/// The smallest element (by area, ties broken by a seeded random key) is
/// merged with its smallest legal neighbour. A merge is legal when the union
/// is a simple polygon that is star-shaped with respect to its centroid.
/// Boundary face kinds are carried over. Deterministic in `seed`.
pub fn agglomerate(mesh: &PolyMesh, target_elements: usize, seed: u64) -> Result<Agglomeration> {
    let n = mesh.num_elements();
    if target_elements == 0 || target_elements > n {
        return Err(Error::InvalidArgument(format!(
            "agglomeration target {target_elements} not in 1..={n}"
        )));
    }
    if target_elements == n {
        return Ok(Agglomeration {
            mesh: mesh.clone(),
            reached_target: true,
        });
    }

    let verts = mesh.vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loops: Vec<Option<Vec<usize>>> = mesh.elements().iter().cloned().map(Some).collect();
    let mut area: Vec<f64> = (0..n).map(|e| mesh.area(e)).collect();
    let mut key: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, lp) in mesh.elements().iter().enumerate() {
        for i in 0..lp.len() {
            owner.insert((lp[i], lp[(i + 1) % lp.len()]), e);
        }
    }
    let poly_of = |lp: &[usize]| -> Vec<Point> { lp.iter().map(|&v| verts[v]).collect() };

    let mut alive = n;
    let mut reached_target = true;
    while alive > target_elements {
        let mut order: Vec<usize> = (0..n).filter(|&e| loops[e].is_some()).collect();
        order.sort_by(|&a, &b| area[a].total_cmp(&area[b]).then(key[a].cmp(&key[b])));
        let mut merged = None;
        'search: for &e in &order {
            let lp = loops[e].as_ref().unwrap();
            let mut nbrs: Vec<usize> = (0..lp.len())
                .filter_map(|i| owner.get(&(lp[(i + 1) % lp.len()], lp[i])).copied())
                .collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            nbrs.sort_by(|&a, &b| area[a].total_cmp(&area[b]).then(key[a].cmp(&key[b])));
            for f in nbrs {
                let Some(m) = merge_loops(lp, loops[f].as_ref().unwrap()) else {
                    continue;
                };
                let poly = poly_of(&m);
                if is_simple(&poly) && is_centroid_star_shaped(&poly) {
                    let a = signed_area(&poly);
                    if (a - area[e] - area[f]).abs() <= 1e-10 * a {
                        merged = Some((e, f, m, a));
                        break 'search;
                    }
                }
            }
        }
        let Some((e, f, m, a)) = merged else {
            reached_target = false;
            log::warn!("agglomeration stopped at {alive} elements (target {target_elements})");
            break;
        };
        let (keep, drop) = (e.min(f), e.max(f));
        for lp in [loops[e].take().unwrap(), loops[f].take().unwrap()] {
            for i in 0..lp.len() {
                owner.remove(&(lp[i], lp[(i + 1) % lp.len()]));
            }
        }
        for i in 0..m.len() {
            owner.insert((m[i], m[(i + 1) % m.len()]), keep);
        }
        loops[keep] = Some(m);
        area[keep] = a;
        area[drop] = 0.0;
        key[keep] = rng.random();
        alive -= 1;
    }

    // Compact elements (by surviving index) and vertices (by first use).
    let mut remap = vec![usize::MAX; verts.len()];
    let mut new_verts = Vec::new();
    let mut new_elems = Vec::with_capacity(alive);
    for lp in loops.into_iter().flatten() {
        let mapped = lp
            .iter()
            .map(|&v| {
                if remap[v] == usize::MAX {
                    remap[v] = new_verts.len();
                    new_verts.push(verts[v]);
                }
                remap[v]
            })
            .collect();
        new_elems.push(mapped);
    }
    let tags: Vec<(usize, usize, FaceKind)> = mesh
        .boundary_tags()
        .into_iter()
        .filter(|&(a, b, _)| remap[a] != usize::MAX && remap[b] != usize::MAX)
        .map(|(a, b, k)| (remap[a], remap[b], k))
        .collect();
    let mesh = PolyMesh::from_polygons(new_verts, new_elems, &tags)?;
    Ok(Agglomeration {
        mesh,
        reached_target,
    })
}
