use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::{norm, sorted3, sub, SurfaceMesh};
use crate::error::{Error, Result};

const MAX_GROUP_ORDER: usize = 4096;

/// Finite isometry group acting on mesh vertices by permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    permutations: Vec<Vec<usize>>,
    orbit_size: Vec<usize>,
    min_orbit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitStats {
    pub orbit_size: Vec<usize>,
    pub ell: usize,
    /// Orbits of size `ell`, each sorted, listed by smallest member.
    pub minimal_orbits: Vec<Vec<usize>>,
}

impl GroupAction {
    pub fn trivial(n: usize) -> Self {
        Self::from_closed(vec![(0..n).collect()])
    }

    /// Closes the named generators under composition and checks that every
    /// element is a mesh isometry.
    pub fn from_generators(mesh: &SurfaceMesh, generators: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let n = mesh.n_vertices();
        for (name, p) in &generators {
            check_bijection(name, p, n)?;
            check_isometry(mesh, name, p)?;
        }
        let identity: Vec<usize> = (0..n).collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut elements = vec![identity.clone()];
        seen.insert(identity.clone());
        let mut queue = VecDeque::from([identity]);
        while let Some(g) = queue.pop_front() {
            for (_, s) in &generators {
                let composed: Vec<usize> = g.iter().map(|&v| s[v]).collect();
                if seen.insert(composed.clone()) {
                    if elements.len() >= MAX_GROUP_ORDER {
                        return Err(Error::IncompatibleGroup {
                            generator: "closure".into(),
                            reason: format!("group order exceeds {MAX_GROUP_ORDER}"),
                        });
                    }
                    elements.push(composed.clone());
                    queue.push_back(composed);
                }
            }
        }
        Ok(Self::from_closed(elements))
    }

    /// Accepts an explicit permutation list, e.g. read from JSON; the list is
    /// closed under composition if it is not already.
    pub fn from_permutations(mesh: &SurfaceMesh, permutations: Vec<Vec<usize>>) -> Result<Self> {
        let generators = permutations
            .into_iter()
            .enumerate()
            .map(|(i, p)| (format!("permutation[{i}]"), p))
            .collect();
        Self::from_generators(mesh, generators)
    }

    fn from_closed(permutations: Vec<Vec<usize>>) -> Self {
        let n = permutations[0].len();
        let orbit_size: Vec<usize> = (0..n)
            .map(|v| {
                let mut images: Vec<usize> = permutations.iter().map(|p| p[v]).collect();
                images.sort_unstable();
                images.dedup();
                images.len()
            })
            .collect();
        let min_orbit = orbit_size.iter().copied().min().unwrap_or(1);
        Self {
            permutations,
            orbit_size,
            min_orbit,
        }
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn group_order(&self) -> usize {
        self.permutations.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.orbit_size.len()
    }

    pub fn orbit_size(&self) -> &[usize] {
        &self.orbit_size
    }

    pub fn min_orbit(&self) -> usize {
        self.min_orbit
    }

    /// Sorted, duplicate-free orbit of `v`.
    pub fn orbit(&self, v: usize) -> Vec<usize> {
        let mut o: Vec<usize> = self.permutations.iter().map(|p| p[v]).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Every orbit once, ordered by smallest member.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let n = self.n_vertices();
        let mut done = vec![false; n];
        let mut out = Vec::new();
        for v in 0..n {
            if done[v] {
                continue;
            }
            let o = self.orbit(v);
            o.iter().for_each(|&w| done[w] = true);
            out.push(o);
        }
        out
    }

    /// `u ∘ σ` for the group element with index `g`.
    pub fn pull_back(&self, g: usize, u: &[f64]) -> Vec<f64> {
        self.permutations[g].iter().map(|&s| u[s]).collect()
    }

    /// Checks that the stored permutations are isometries of `mesh`.
    pub fn validate(&self, mesh: &SurfaceMesh) -> Result<()> {
        if mesh.n_vertices() != self.n_vertices() {
            return Err(Error::IncompatibleGroup {
                generator: "action".into(),
                reason: format!("acts on {} vertices, mesh has {}", self.n_vertices(), mesh.n_vertices()),
            });
        }
        for (i, p) in self.permutations.iter().enumerate() {
            let name = format!("element[{i}]");
            check_bijection(&name, p, mesh.n_vertices())?;
            check_isometry(mesh, &name, p)?;
        }
        Ok(())
    }
}

pub fn orbit_stats(action: &GroupAction) -> OrbitStats {
    let minimal_orbits = action
        .orbits()
        .into_iter()
        .filter(|o| o.len() == action.min_orbit)
        .collect();
    OrbitStats {
        orbit_size: action.orbit_size.clone(),
        ell: action.min_orbit,
        minimal_orbits,
    }
}

fn check_bijection(name: &str, p: &[usize], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::IncompatibleGroup {
            generator: name.into(),
            reason: format!("has length {}, mesh has {n} vertices", p.len()),
        });
    }
    let mut hit = vec![false; n];
    for &v in p {
        if v >= n || std::mem::replace(&mut hit[v], true) {
            return Err(Error::IncompatibleGroup {
                generator: name.into(),
                reason: "is not a bijection on vertex indices".into(),
            });
        }
    }
    Ok(())
}

fn check_isometry(mesh: &SurfaceMesh, name: &str, p: &[usize]) -> Result<()> {
    let triangles: HashSet<[usize; 3]> = mesh.triangles().iter().map(|t| sorted3(*t)).collect();
    for t in mesh.triangles() {
        if !triangles.contains(&sorted3([p[t[0]], p[t[1]], p[t[2]]])) {
            return Err(Error::IncompatibleGroup {
                generator: name.into(),
                reason: format!("maps triangle {t:?} outside the triangle set"),
            });
        }
    }
    let h = mesh.mean_edge_length();
    for (a, b) in mesh.edges() {
        let l0 = norm(mesh.edge_vector(a, b));
        let l1 = norm(mesh.edge_vector(p[a], p[b]));
        if (l0 - l1).abs() > 1e-9 * h {
            return Err(Error::IncompatibleGroup {
                generator: name.into(),
                reason: format!("changes the length of edge ({a}, {b}) from {l0} to {l1}"),
            });
        }
    }
    Ok(())
}

/// Vertex permutation induced by a coordinate map, matched to `tol`.
pub(crate) fn permutation_from_map<F>(mesh: &SurfaceMesh, name: &str, map: F, tol: f64) -> Result<Vec<usize>>
where
    F: Fn([f64; 3]) -> [f64; 3],
{
    let key = |x: [f64; 3]| x.map(|c| (c / tol).round() as i64);
    let mut lookup: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, &x) in mesh.vertices().iter().enumerate() {
        lookup.entry(key(x)).or_default().push(i);
    }
    let mut perm = Vec::with_capacity(mesh.n_vertices());
    for (i, &x) in mesh.vertices().iter().enumerate() {
        let y = map(x);
        let k = key(y);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = lookup.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if let Some(&j) = list.iter().find(|&&j| norm(sub(mesh.vertices()[j], y)) <= tol) {
                            found = Some(j);
                            break 'search;
                        }
                    }
                }
            }
        }
        match found {
            Some(j) => perm.push(j),
            None => {
                return Err(Error::IncompatibleGroup {
                    generator: name.into(),
                    reason: format!("image of vertex {i} is not a mesh vertex"),
                })
            }
        }
    }
    Ok(perm)
}
