//! ReplaceLoop: the smallest contraction loop among the occurrences of a
//! vertex function, replaced by one output function.

use std::collections::{HashMap, VecDeque};

use crate::compiler::LoopSpec;
use crate::symbols::SymbolTable;
use crate::term::{normalize, permutation_sign, FuncApp, IdxId, Poly, SubTerm, Symmetry, Term};

/// Adjacency lists of a multigraph: `(edge, neighbour)` in slot order.
pub type Adjacency = Vec<Vec<(usize, usize)>>;

/// A cycle as vertices `v[0..L]` and edges, edge `i` joining `v[i]` and `v[i+1 mod L]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// BFS tree links: `(edge, parent)` per vertex.
type Parents = Vec<Option<(usize, usize)>>;

/// Shortest cycle by breadth-first search from every root in order. The
/// first root reaching the girth wins, and within it the first closing edge
/// met in scan order.
pub fn shortest_cycle(adj: &Adjacency) -> Option<Cycle> {
    let n = adj.len();
    let mut best: Option<(usize, usize, usize, usize, Parents)> = None;
    for root in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut parent: Parents = vec![None; n];
        let mut queue = VecDeque::new();
        dist[root] = 0;
        queue.push_back(root);
        let mut found: Option<(usize, usize, usize, usize)> = None;
        while let Some(u) = queue.pop_front() {
            if found.is_some_and(|(len, ..)| 2 * dist[u] + 1 >= len) {
                break;
            }
            for &(e, w) in &adj[u] {
                if parent[u].is_some_and(|(pe, _)| pe == e) {
                    continue;
                }
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = Some((e, u));
                    queue.push_back(w);
                } else {
                    let len = dist[u] + dist[w] + 1;
                    if found.is_none_or(|(l, ..)| len < l) {
                        found = Some((len, u, w, e));
                    }
                }
            }
        }
        if let Some((len, u, w, e)) = found {
            if best.as_ref().is_none_or(|b| len < b.0) {
                best = Some((len, u, w, e, parent));
            }
        }
    }
    let (_, u, w, e, parent) = best?;
    let path_to_root = |mut v: usize| {
        let mut verts = vec![v];
        let mut edges = Vec::new();
        while let Some((pe, pv)) = parent[v] {
            edges.push(pe);
            verts.push(pv);
            v = pv;
        }
        (verts, edges)
    };
    let (mut vu, mut eu) = path_to_root(u);
    let (vw, ew) = path_to_root(w);
    vu.reverse();
    eu.reverse();
    // root .. u, then e, then w .. (excluding root)
    let mut vertices = vu;
    let mut edges = eu;
    edges.push(e);
    vertices.extend(vw.iter().take(vw.len() - 1));
    edges.extend(ew);
    Some(Cycle { vertices, edges })
}

/// First cycle of exactly `k` edges by depth-first search; each cycle is
/// reported from its smallest vertex.
pub fn cycle_of_length(adj: &Adjacency, k: usize) -> Option<Cycle> {
    fn dfs(adj: &Adjacency, k: usize, root: usize, verts: &mut Vec<usize>, edges: &mut Vec<usize>) -> bool {
        let u = *verts.last().expect("nonempty path");
        for &(e, w) in &adj[u] {
            if edges.contains(&e) {
                continue;
            }
            if w == root && edges.len() + 1 == k {
                edges.push(e);
                return true;
            }
            if w > root && !verts.contains(&w) && edges.len() + 1 < k {
                verts.push(w);
                edges.push(e);
                if dfs(adj, k, root, verts, edges) {
                    return true;
                }
                verts.pop();
                edges.pop();
            }
        }
        false
    }
    if k < 2 {
        return None;
    }
    for root in 0..adj.len() {
        let (mut verts, mut edges) = (vec![root], Vec::new());
        if dfs(adj, k, root, &mut verts, &mut edges) {
            return Some(Cycle { vertices: verts, edges });
        }
    }
    None
}

fn bare_index(p: &Poly) -> Option<IdxId> {
    match p.as_single_term() {
        Some(t) if t.coeff == num::One::one() => match t.factors.as_slice() {
            [SubTerm::Index(i)] => Some(*i),
            _ => None,
        },
        _ => None,
    }
}

struct Edge {
    index: IdxId,
    /// (vertex, argument position) of both ends.
    ends: [(usize, usize); 2],
}

/// Applies one ReplaceLoop to `term`; `None` when no loop is found.
pub fn replace_loop(term: &Term, spec: &LoopSpec, table: &SymbolTable) -> Option<Poly> {
    let vertex_of: Vec<usize> = term
        .factors
        .iter()
        .enumerate()
        .filter(|(_, f)| matches!(f, SubTerm::Func(fa) if fa.id == spec.fun && fa.args.len() == spec.arguments))
        .map(|(i, _)| i)
        .collect();
    let args = |v: usize| match &term.factors[vertex_of[v]] {
        SubTerm::Func(fa) => &fa.args,
        _ => unreachable!("vertices are function factors"),
    };
    let mut slots: HashMap<IdxId, Vec<(usize, usize)>> = HashMap::new();
    for v in 0..vertex_of.len() {
        for (pos, a) in args(v).iter().enumerate() {
            if let Some(i) = bare_index(a) {
                slots.entry(i).or_default().push((v, pos));
            }
        }
    }
    let mut edges: Vec<Edge> = slots
        .into_iter()
        .filter(|(_, s)| s.len() == 2 && s[0].0 != s[1].0)
        .map(|(index, s)| Edge { index, ends: [s[0], s[1]] })
        .collect();
    edges.sort_by_key(|e| e.ends);
    let mut adj: Adjacency = vec![Vec::new(); vertex_of.len()];
    let mut by_slot: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (id, e) in edges.iter().enumerate() {
        for (k, &(v, pos)) in e.ends.iter().enumerate() {
            by_slot.push((v, pos, id, e.ends[1 - k].0));
        }
    }
    by_slot.sort();
    for (v, _, id, w) in by_slot {
        adj[v].push((id, w));
    }
    let cycle = match spec.loopsize {
        None => shortest_cycle(&adj)?,
        Some(k) => cycle_of_length(&adj, k)?,
    };
    let order = orient(&cycle, &edges);
    let loop_slots: HashMap<usize, Vec<usize>> = {
        let mut m: HashMap<usize, Vec<usize>> = HashMap::new();
        for &e in &cycle.edges {
            for &(v, pos) in &edges[e].ends {
                m.entry(v).or_default().push(pos);
            }
        }
        m
    };
    let antisymmetric = table.function(spec.fun).symmetry == Symmetry::Antisymmetric;
    let mut sign = 1i8;
    let mut out_args = Vec::new();
    for &v in &order {
        let mut loops = loop_slots[&v].clone();
        loops.sort_unstable();
        let externals: Vec<usize> = (0..spec.arguments).filter(|p| !loops.contains(p)).collect();
        out_args.extend(externals.iter().map(|&p| args(v)[p].clone()));
        if antisymmetric {
            let mut perm = vec![loops[0]];
            perm.extend(&externals);
            perm.extend(&loops[1..]);
            sign *= permutation_sign(&perm);
        }
    }
    let info = table.function(spec.outfun);
    let mut factors: Vec<SubTerm> = term
        .factors
        .iter()
        .enumerate()
        .filter(|(i, _)| !order.iter().any(|&v| vertex_of[v] == *i))
        .map(|(_, f)| f.clone())
        .collect();
    factors.push(SubTerm::Func(FuncApp::with_props(spec.outfun, out_args, info.commuting(), info.symmetry)));
    let mut coeff = term.coeff.clone();
    if sign < 0 {
        coeff = -coeff;
    }
    Some(normalize(Term { coeff, factors }).map(Poly::from_term).unwrap_or_default())
}

/// Listing order of the loop vertices: walk away from the lower argument
/// slot of the smallest loop index, then rotate to the first vertex.
fn orient(cycle: &Cycle, edges: &[Edge]) -> Vec<usize> {
    let l = cycle.len();
    let (k, _) = cycle.edges.iter().enumerate().min_by_key(|(_, &e)| edges[e].index).expect("nonempty cycle");
    let e = &edges[cycle.edges[k]];
    let [(va, pa), (vb, pb)] = e.ends;
    let start = if (pa, va) <= (pb, vb) { va } else { vb };
    // edge k joins cycle.vertices[k] and cycle.vertices[k+1]
    let mut walk: Vec<usize> = if cycle.vertices[k] == start {
        (0..l).map(|i| cycle.vertices[(k + i) % l]).collect()
    } else {
        (0..l).map(|i| cycle.vertices[(k + 1 + l - i) % l]).collect()
    };
    let first = walk.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).expect("nonempty");
    walk.rotate_left(first);
    walk
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::ast::parse_algebra;
    use crate::eval::{eval, EvalCtx};
    use crate::symbols::FuncClass;

    fn setup() -> (SymbolTable, LoopSpec) {
        let mut t = SymbolTable::new();
        for i in 1..=9 {
            t.add_index(&format!("i{i}")).unwrap();
        }
        let f = t.add_function("f", FuncClass::Commuting, Symmetry::Antisymmetric).unwrap();
        let ff = t.add_function("ff", FuncClass::Commuting, Symmetry::None).unwrap();
        (t, LoopSpec { fun: f, arguments: 3, loopsize: None, outfun: ff })
    }

    fn term(src: &str, t: &SymbolTable) -> Term {
        eval(&parse_algebra(src, t).unwrap(), &EvalCtx::new(t)).unwrap().as_single_term().unwrap().clone()
    }

    const NETWORK: &str = "f(i1,i2,i3)*f(i2,i4,i5)*f(i3,i5,i6)*f(i4,i7,i8)*f(i6,i7,i9)*f(i1,i8,i9)";

    #[test]
    fn single_replacement() {
        let (t, spec) = setup();
        let r = replace_loop(&term(NETWORK, &t), &spec, &t).unwrap();
        assert_eq!(r, Poly::from_term(term("f(i1,i8,i9)*f(i4,i7,i8)*f(i6,i7,i9)*ff(i1,i6,i4)", &t)));
    }

    #[test]
    fn repeated_replacement() {
        let (t, spec) = setup();
        let mut cur = term(NETWORK, &t);
        while let Some(next) = replace_loop(&cur, &spec, &t) {
            cur = next.as_single_term().unwrap().clone();
        }
        assert_eq!(cur, term("-ff(i1,i4,i6)*ff(i1,i6,i4)", &t));
    }

    #[test]
    fn trees_and_double_edges() {
        let (t, mut spec) = setup();
        assert!(replace_loop(&term("f(i1,i2,i3)*f(i3,i4,i5)", &t), &spec, &t).is_none());
        let r = replace_loop(&term("f(i1,i2,i3)*f(i2,i3,i4)", &t), &spec, &t).unwrap();
        assert_eq!(r.as_single_term().unwrap().factors.len(), 1);
        spec.loopsize = Some(2);
        assert!(replace_loop(&term(NETWORK, &t), &spec, &t).is_none());
    }

    #[test]
    fn exact_length_search() {
        // square 0-1-2-3 with diagonal 0-2
        let adj: Adjacency = vec![
            vec![(0, 1), (3, 3), (4, 2)],
            vec![(0, 0), (1, 2)],
            vec![(1, 1), (2, 3), (4, 0)],
            vec![(2, 2), (3, 0)],
        ];
        assert_eq!(shortest_cycle(&adj).unwrap().len(), 3);
        assert_eq!(cycle_of_length(&adj, 4).unwrap().vertices, vec![0, 1, 2, 3]);
        assert!(cycle_of_length(&adj, 5).is_none());
    }
}
