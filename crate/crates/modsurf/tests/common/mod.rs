//! Independent oracles for the integration tests.
//!
//! Nothing here shares code with the production solver: paths are found by
//! exhaustive DFS enumeration, the modulus by projected *gradient* ascent on
//! the dual over the full path-constraint matrix (the production solver uses
//! constraint generation plus coordinate ascent), and cuts by subset
//! enumeration. Oracle values are certified by a primal/dual sandwich before
//! being compared against production output.

#![allow(dead_code)]

use modsurf::surface::{EdgeId, MetricMesh, VertexId};

struct PathSearch<'a> {
    mesh: &'a MetricMesh<f64>,
    is_sink: Vec<bool>,
    allowed: Option<&'a [bool]>,
    on_path: Vec<bool>,
    edges: Vec<EdgeId>,
    paths: Vec<Vec<EdgeId>>,
    cap: usize,
    overflow: bool,
}

impl PathSearch<'_> {
    fn dfs(&mut self, v: VertexId) {
        if self.overflow {
            return;
        }
        if self.is_sink[v] {
            // Curves stop at the first sink hit.
            self.paths.push(self.edges.clone());
            if self.paths.len() > self.cap {
                self.overflow = true;
            }
            return;
        }
        for k in 0..self.mesh.neighbors(v).len() {
            let (e, to) = self.mesh.neighbors(v)[k];
            if !self.on_path[to] && self.allowed.map_or(true, |a| a[to]) {
                self.on_path[to] = true;
                self.edges.push(e);
                self.dfs(to);
                self.edges.pop();
                self.on_path[to] = false;
            }
        }
    }
}

/// All simple paths (as edge sequences) from any source to any sink staying
/// inside `allowed`. Returns `None` when more than `cap` paths exist.
pub fn enumerate_simple_paths(
    mesh: &MetricMesh<f64>,
    sources: &[VertexId],
    sinks: &[VertexId],
    allowed: Option<&[bool]>,
    cap: usize,
) -> Option<Vec<Vec<EdgeId>>> {
    let mut is_sink = vec![false; mesh.vertex_count()];
    for &v in sinks {
        is_sink[v] = true;
    }
    let mut sorted_sources: Vec<_> = sources.to_vec();
    sorted_sources.sort_unstable();
    sorted_sources.dedup();

    let mut search = PathSearch {
        mesh,
        is_sink,
        allowed,
        on_path: vec![false; mesh.vertex_count()],
        edges: Vec::new(),
        paths: Vec::new(),
        cap,
        overflow: false,
    };
    for &s in &sorted_sources {
        if search.allowed.map_or(false, |a| !a[s]) || search.is_sink[s] {
            continue;
        }
        search.on_path[s] = true;
        search.dfs(s);
        search.on_path[s] = false;
        if search.overflow {
            return None;
        }
    }
    Some(search.paths)
}

/// Modulus by projected gradient ascent on the dual of the full-path QP:
/// maximize Σλ − ¼·λᵀMλ over λ ≥ 0 with M[i][j] = Σ_e len(e)²/w(e) over
/// shared edges. Paths that contain a positive-length zero-area edge are
/// satisfiable at zero cost and are dropped, mirroring the solver contract.
/// Returns the certified value (primal/dual gap below `1e-9` relative).
pub fn dense_qp_modulus(mesh: &MetricMesh<f64>, all_paths: &[Vec<EdgeId>]) -> f64 {
    let w = mesh.edge_areas();
    let free_edge = |e: EdgeId| w[e] == 0.0 && mesh.edge(e).length > 0.0;
    let paths: Vec<&Vec<EdgeId>> = all_paths
        .iter()
        .filter(|p| !p.iter().any(|&e| free_edge(e)))
        .collect();
    if paths.is_empty() {
        return 0.0;
    }
    // A constraint path of zero total length cannot be satisfied: +infinity.
    if paths
        .iter()
        .any(|p| p.iter().map(|&e| mesh.edge(e).length).sum::<f64>() == 0.0)
    {
        return f64::INFINITY;
    }

    let m = paths.len();
    let mut gram = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        for j in i..m {
            let mut acc = 0.0;
            for &e in paths[i] {
                if w[e] > 0.0 && paths[j].contains(&e) {
                    let l = mesh.edge(e).length;
                    acc += l * l / w[e];
                }
            }
            gram[i][j] = acc;
            gram[j][i] = acc;
        }
    }
    let lipschitz = gram
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(0.0f64, f64::max)
        / 2.0;
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };

    let mut lambda = vec![0.0f64; m];
    let mut grad = vec![0.0f64; m];
    for _ in 0..2_000_000 {
        let mut kkt: f64 = 0.0;
        for i in 0..m {
            let mut g = 1.0;
            for j in 0..m {
                g -= 0.5 * gram[i][j] * lambda[j];
            }
            grad[i] = g;
            let viol = if lambda[i] > 0.0 { g.abs() } else { g.max(0.0) };
            kkt = kkt.max(viol);
        }
        if kkt < 1e-12 {
            break;
        }
        for i in 0..m {
            lambda[i] = (lambda[i] + step * grad[i]).max(0.0);
        }
    }

    // Recover the density and certify with a primal/dual sandwich.
    let mut rho = vec![0.0f64; mesh.edge_count()];
    for (i, p) in paths.iter().enumerate() {
        for &e in *p {
            if w[e] > 0.0 {
                rho[e] += lambda[i] * mesh.edge(e).length / (2.0 * w[e]);
            }
        }
    }
    let energy: f64 = (0..mesh.edge_count())
        .map(|e| rho[e] * rho[e] * w[e])
        .sum();
    let min_len = paths
        .iter()
        .map(|p| p.iter().map(|&e| rho[e] * mesh.edge(e).length).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    assert!(min_len > 0.0, "oracle dual ascent failed to make progress");
    let primal = energy / (min_len * min_len);
    let dual: f64 = lambda.iter().sum::<f64>() - {
        let mut q = 0.0;
        for i in 0..m {
            for j in 0..m {
                q += gram[i][j] * lambda[i] * lambda[j];
            }
        }
        q / 4.0
    };
    assert!(
        primal - dual <= 1e-9 * primal.max(1.0),
        "oracle not converged: primal {primal} dual {dual}"
    );
    primal
}

fn combinations_find(n: usize, k: usize, hit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        hit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if chosen.len() == k {
            return hit(chosen);
        }
        let remaining = k - chosen.len();
        for i in start..=(n - remaining) {
            chosen.push(i);
            if rec(i + 1, n, k, chosen, hit) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if k > n {
        return false;
    }
    rec(0, n, k, &mut Vec::new(), hit)
}

/// Minimum-cardinality subset of `candidates` whose removal separates `a`
/// from `b`, by enumerating subsets in order of size.
pub fn min_cut_bruteforce(
    mesh: &MetricMesh<f64>,
    a: &[VertexId],
    b: &[VertexId],
    candidates: &[EdgeId],
) -> Option<usize> {
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let n = p[c];
            p[c] = r;
            c = n;
        }
        r
    }
    let separated = |removed: &[EdgeId]| -> bool {
        let mut parent: Vec<usize> = (0..mesh.vertex_count()).collect();
        for e in 0..mesh.edge_count() {
            if !removed.contains(&e) {
                let ed = mesh.edge(e);
                let (ra, rb) = (find(&mut parent, ed.a), find(&mut parent, ed.b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        !a.iter().any(|&va| {
            b.iter()
                .any(|&vb| find(&mut parent, va) == find(&mut parent, vb))
        })
    };

    let n = candidates.len();
    assert!(n <= 20, "brute-force cut enumeration capped at 20 edges");
    for size in 0..=n {
        let mut witness: Option<usize> = None;
        combinations_find(n, size, &mut |idx| {
            let subset: Vec<EdgeId> = idx.iter().map(|&k| candidates[k]).collect();
            if separated(&subset) {
                witness = Some(size);
                true
            } else {
                false
            }
        });
        if witness.is_some() {
            return witness;
        }
    }
    None
}
