//! Tree decompositions of queries: chordality, junction trees, acyclicity,
//! simplicity, and the entropy expression `E_T` attached to a decomposition.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::graph::Graph;
use crate::inequality::LinearExpression;
use crate::query::{gaifman_graph, ConjunctiveQuery};
use crate::varset::VarSet;
use crate::Rational;

/// Default number of junction trees returned by [`enumerate_junction_trees`].
pub const DEFAULT_JT_LIMIT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("the Gaifman graph is not chordal")]
    NotChordal,
    #[error("edge ({0}, {1}) refers to a missing node")]
    BadEdge(usize, usize),
    #[error("edges do not form a forest")]
    NotForest,
    #[error("variable {0} violates the running intersection property")]
    RunningIntersection(usize),
    #[error("atom {0} is not covered by any bag")]
    Uncovered(usize),
    #[error("parent pointers disagree with the edge set")]
    BadOrientation,
    #[error("malformed decomposition text at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A forest of bags with a parent orientation (roots have no parent).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    bags: Vec<VarSet>,
    edges: Vec<(usize, usize)>,
    parent: Vec<Option<usize>>,
}

/// Structural flags of a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecompositionClass {
    pub chordal: bool,
    pub acyclic: bool,
    pub simple: bool,
    pub totally_disconnected: bool,
}

impl TreeDecomposition {
    /// Build from bags and undirected edges; each component is rooted at
    /// its smallest node id.
    pub fn new(
        bags: Vec<VarSet>,
        edges: Vec<(usize, usize)>,
    ) -> Result<TreeDecomposition, DecompositionError> {
        let roots: Vec<usize> = Vec::new();
        TreeDecomposition::with_roots(bags, edges, &roots)
    }

    /// Like [`TreeDecomposition::new`], but components containing one of
    /// `roots` are rooted there instead.
    pub fn with_roots(
        bags: Vec<VarSet>,
        edges: Vec<(usize, usize)>,
        roots: &[usize],
    ) -> Result<TreeDecomposition, DecompositionError> {
        let n = bags.len();
        let mut adj = vec![Vec::new(); n];
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(DecompositionError::BadEdge(a, b));
            }
            adj[a].push(b);
            adj[b].push(a);
            norm.push((a.min(b), a.max(b)));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order: Vec<usize> = roots.iter().copied().filter(|&r| r < n).collect();
        order.extend(0..n);
        let mut visited_edges = 0;
        for start in order {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if Some(v) == parent[u] {
                        continue;
                    }
                    if seen[v] {
                        return Err(DecompositionError::NotForest);
                    }
                    seen[v] = true;
                    parent[v] = Some(u);
                    visited_edges += 1;
                    stack.push(v);
                }
            }
        }
        if visited_edges != norm.len() {
            return Err(DecompositionError::NotForest);
        }
        norm.sort_unstable();
        Ok(TreeDecomposition {
            bags,
            edges: norm,
            parent,
        })
    }

    /// The single-bag decomposition holding every variable.
    pub fn trivial(n_vars: usize) -> TreeDecomposition {
        TreeDecomposition {
            bags: vec![VarSet::full(n_vars)],
            edges: Vec::new(),
            parent: vec![None],
        }
    }

    pub fn bags(&self) -> &[VarSet] {
        &self.bags
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.bags.len()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.bags.len())
            .filter(|&t| self.parent[t].is_none())
            .collect()
    }

    /// Same forest, rooted at `root` within its component.
    pub fn reroot(&self, root: usize) -> TreeDecomposition {
        TreeDecomposition::with_roots(self.bags.clone(), self.edges.clone(), &[root])
            .expect("already a forest")
    }

    pub fn vars(&self) -> VarSet {
        self.bags.iter().fold(VarSet::EMPTY, |a, &b| a.union(b))
    }

    /// Check running intersection and parent consistency; when `atoms` are
    /// given, also check that each atom is covered by a bag.
    pub fn validate(&self, atoms: &[VarSet]) -> Result<(), DecompositionError> {
        for (t, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if self.edges.binary_search(&(t.min(p), t.max(p))).is_err() {
                    return Err(DecompositionError::BadOrientation);
                }
            }
        }
        if self.parent.iter().filter(|p| p.is_some()).count() != self.edges.len() {
            return Err(DecompositionError::BadOrientation);
        }
        for x in self.vars().iter() {
            let holders: Vec<usize> = (0..self.bags.len())
                .filter(|&t| self.bags[t].contains(x))
                .collect();
            // a node set in a forest is connected iff it spans |nodes|-1 edges
            let inside = self
                .edges
                .iter()
                .filter(|&&(a, b)| self.bags[a].contains(x) && self.bags[b].contains(x))
                .count();
            if inside + 1 != holders.len() {
                return Err(DecompositionError::RunningIntersection(x));
            }
        }
        for (i, a) in atoms.iter().enumerate() {
            if !self.bags.iter().any(|b| a.is_subset(*b)) {
                return Err(DecompositionError::Uncovered(i));
            }
        }
        Ok(())
    }

    /// Node ids of the connected component containing `t`.
    fn component_count(&self, nodes: &[bool]) -> usize {
        let n = self.bags.len();
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while c[r] != r {
                r = c[r];
            }
            let mut y = x;
            while c[y] != r {
                let next = c[y];
                c[y] = r;
                y = next;
            }
            r
        }
        for &(a, b) in &self.edges {
            if nodes[a] && nodes[b] {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                comp[ra] = rb;
            }
        }
        (0..n)
            .filter(|&t| nodes[t] && find(&mut comp, t) == t)
            .count()
    }

    /// Text form: `bag <id>: v1 v2 ...` per node, then `edge <a> <b>`.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (t, b) in self.bags.iter().enumerate() {
            let vs: Vec<&str> = b.iter().map(|v| names[v].as_str()).collect();
            s.push_str(&format!("bag {t}: {}\n", vs.join(" ")));
        }
        for (a, b) in &self.edges {
            s.push_str(&format!("edge {a} {b}\n"));
        }
        s
    }

    /// Parse the text form; variable names are resolved through `names`.
    pub fn from_text(
        text: &str,
        names: &[String],
    ) -> Result<TreeDecomposition, DecompositionError> {
        let mut bags: BTreeMap<usize, VarSet> = BTreeMap::new();
        let mut edges = Vec::new();
        let err = |line: usize, message: &str| DecompositionError::Parse {
            line,
            message: message.to_string(),
        };
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("bag ") {
                let (id, vars) = rest.split_once(':').ok_or_else(|| err(ln, "missing ':'"))?;
                let id: usize = id.trim().parse().map_err(|_| err(ln, "bad node id"))?;
                let mut set = VarSet::EMPTY;
                for v in vars.split_whitespace() {
                    let idx = names
                        .iter()
                        .position(|n| n == v)
                        .ok_or_else(|| err(ln, "unknown variable"))?;
                    set.insert(idx);
                }
                bags.insert(id, set);
            } else if let Some(rest) = line.strip_prefix("edge ") {
                let ids: Vec<usize> = rest
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| err(ln, "bad node id")))
                    .collect::<Result<_, _>>()?;
                if ids.len() != 2 {
                    return Err(err(ln, "edge needs two node ids"));
                }
                edges.push((ids[0], ids[1]));
            } else {
                return Err(err(ln, "expected 'bag' or 'edge'"));
            }
        }
        if bags.keys().enumerate().any(|(i, &k)| i != k) {
            return Err(err(0, "node ids must be dense from 0"));
        }
        TreeDecomposition::new(bags.into_values().collect(), edges)
    }
}

impl fmt::Display for TreeDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..32).map(|i| format!("v{i}")).collect();
        write!(f, "{}", self.to_text(&names))
    }
}

// ---------------------------------------------------------------------------
// Chordality and junction trees

/// Maximum cardinality search; ties go to the smallest vertex index. Returns
/// the visit order.
fn maximum_cardinality_search(g: &Graph) -> Vec<usize> {
    let n = g.num_vertices();
    let mut weight = vec![0usize; n];
    let mut done = VarSet::EMPTY;
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !done.contains(v))
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("vertex left");
        done.insert(v);
        order.push(v);
        for u in g.neighbors(v).iter() {
            if !done.contains(u) {
                weight[u] += 1;
            }
        }
    }
    order
}

/// Chordality test. On success returns a perfect elimination order (each
/// vertex's later neighbours form a clique).
pub fn is_chordal(g: &Graph) -> (bool, Option<Vec<usize>>) {
    let mut peo = maximum_cardinality_search(g);
    peo.reverse();
    let mut pos = vec![0; peo.len()];
    for (i, &v) in peo.iter().enumerate() {
        pos[v] = i;
    }
    for (i, &v) in peo.iter().enumerate() {
        let later = VarSet::from_iter(g.neighbors(v).iter().filter(|&u| pos[u] > i));
        if !g.is_clique(later) {
            return (false, None);
        }
    }
    (true, Some(peo))
}

/// Maximal cliques of a chordal graph, sorted by bitmask.
pub fn maximal_cliques(g: &Graph) -> Result<Vec<VarSet>, DecompositionError> {
    let (ok, peo) = is_chordal(g);
    let peo = match (ok, peo) {
        (true, Some(p)) => p,
        _ => return Err(DecompositionError::NotChordal),
    };
    let mut pos = vec![0; peo.len()];
    for (i, &v) in peo.iter().enumerate() {
        pos[v] = i;
    }
    let mut cands: Vec<VarSet> = peo
        .iter()
        .enumerate()
        .map(|(i, &v)| VarSet::from_iter(g.neighbors(v).iter().filter(|&u| pos[u] > i)).with(v))
        .collect();
    cands.sort_unstable();
    cands.dedup();
    let mut out: Vec<VarSet> = cands
        .iter()
        .copied()
        .filter(|c| !cands.iter().any(|d| d != c && c.is_subset(*d)))
        .collect();
    out.sort_unstable();
    Ok(out)
}

fn clique_graph_edges(cliques: &[VarSet]) -> Vec<(usize, usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..cliques.len() {
        for b in a + 1..cliques.len() {
            let w = cliques[a].intersection(cliques[b]).len();
            if w > 0 {
                edges.push((a, b, w));
            }
        }
    }
    edges
}

/// Junction tree of a chordal query: bags are the maximal cliques, edges a
/// maximum-weight spanning forest of the clique graph (weight = separator
/// size, ties to the smallest clique-id pair).
pub fn junction_tree(q: &ConjunctiveQuery) -> Result<TreeDecomposition, DecompositionError> {
    let cliques = maximal_cliques(&gaifman_graph(q))?;
    let td = spanning_junction(cliques)?;
    td.validate(&q.atom_sets())?;
    Ok(td)
}

/// Tree decomposition from a min-fill elimination order: bags are the
/// maximal elimination cliques, so it is a junction tree of the filled
/// graph. Equals [`junction_tree`] on chordal queries up to tie-breaking.
pub fn triangulated_decomposition(
    q: &ConjunctiveQuery,
) -> Result<TreeDecomposition, DecompositionError> {
    let mut g = gaifman_graph(q);
    let n = g.num_vertices();
    let mut alive = VarSet::full(n);
    let mut bags: Vec<VarSet> = Vec::new();
    while !alive.is_empty() {
        let fill = |v: usize, g: &Graph| {
            let nb: Vec<usize> = g.neighbors(v).intersection(alive).iter().collect();
            let mut missing = 0;
            for (i, &a) in nb.iter().enumerate() {
                missing += nb[i + 1..].iter().filter(|&&b| !g.has_edge(a, b)).count();
            }
            missing
        };
        let v = alive
            .iter()
            .min_by_key(|&v| (fill(v, &g), v))
            .expect("nonempty");
        let nb = g.neighbors(v).intersection(alive);
        let members: Vec<usize> = nb.iter().collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                g.add_edge(a, b);
            }
        }
        let bag = nb.with(v);
        if !bags.iter().any(|b| bag.is_subset(*b)) {
            bags.retain(|b| !b.is_subset(bag));
            bags.push(bag);
        }
        alive.remove(v);
    }
    bags.sort_by_key(|b| b.bits());
    let td = spanning_junction(bags)?;
    td.validate(&q.atom_sets())?;
    Ok(td)
}

/// Maximum-weight spanning forest of the clique graph.
fn spanning_junction(cliques: Vec<VarSet>) -> Result<TreeDecomposition, DecompositionError> {
    let mut edges = clique_graph_edges(&cliques);
    edges.sort_by(|x, y| y.2.cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    let mut comp: Vec<usize> = (0..cliques.len()).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        if c[x] != x {
            let r = find(c, c[x]);
            c[x] = r;
        }
        c[x]
    }
    let mut chosen = Vec::new();
    for (a, b, _) in edges {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        if ra != rb {
            comp[ra] = rb;
            chosen.push((a, b));
        }
    }
    TreeDecomposition::new(cliques, chosen)
}

/// All junction trees (maximum-weight spanning forests of the clique
/// graph), truncated at `limit`, in lexicographic edge order.
pub fn enumerate_junction_trees(
    q: &ConjunctiveQuery,
    limit: usize,
) -> Result<Vec<TreeDecomposition>, DecompositionError> {
    let base = junction_tree(q)?;
    let cliques = base.bags().to_vec();
    let target_weight: usize = base
        .edges()
        .iter()
        .map(|&(a, b)| cliques[a].intersection(cliques[b]).len())
        .sum();
    let target_edges = base.edges().len();
    let edges = clique_graph_edges(&cliques);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    enumerate_forests(
        &cliques,
        &edges,
        0,
        target_edges,
        target_weight,
        &mut chosen,
        &mut out,
        limit,
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_forests(
    cliques: &[VarSet],
    edges: &[(usize, usize, usize)],
    from: usize,
    need: usize,
    weight_left: usize,
    chosen: &mut Vec<(usize, usize)>,
    out: &mut Vec<TreeDecomposition>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if need == 0 {
        if weight_left == 0 {
            if let Ok(td) = TreeDecomposition::new(cliques.to_vec(), chosen.clone()) {
                out.push(td);
            }
        }
        return;
    }
    for i in from..edges.len() {
        let (a, b, w) = edges[i];
        if w > weight_left || edges.len() - i < need {
            continue;
        }
        chosen.push((a, b));
        if TreeDecomposition::new(cliques.to_vec(), chosen.clone()).is_ok() {
            enumerate_forests(
                cliques,
                edges,
                i + 1,
                need - 1,
                weight_left - w,
                chosen,
                out,
                limit,
            );
        }
        chosen.pop();
        if out.len() >= limit {
            return;
        }
    }
}

/// GYO reduction: repeatedly drop variables occurring in a single hyperedge
/// and hyperedges contained in another. Acyclic iff everything vanishes.
pub fn is_acyclic(q: &ConjunctiveQuery) -> bool {
    gyo_reduces(q.atom_sets())
}

pub(crate) fn gyo_reduces(mut edges: Vec<VarSet>) -> bool {
    loop {
        let mut changed = false;
        let all = edges.iter().fold(VarSet::EMPTY, |a, &b| a.union(b));
        for x in all.iter() {
            let count = edges.iter().filter(|e| e.contains(x)).count();
            if count == 1 {
                for e in edges.iter_mut() {
                    e.remove(x);
                }
                changed = true;
            }
        }
        edges.retain(|e| !e.is_empty());
        let mut i = 0;
        while i < edges.len() {
            let ei = edges[i];
            let absorbed = edges
                .iter()
                .enumerate()
                .any(|(j, &ej)| j != i && ei.is_subset(ej) && (ei != ej || j < i));
            if absorbed {
                edges.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        if edges.is_empty() {
            return true;
        }
        if !changed {
            return false;
        }
    }
}

/// Classify a decomposition. `acyclic` holds when every bag is the variable
/// set of some atom in `atoms`; `chordal` when every bag is a clique of the
/// graph spanned by `atoms`.
pub fn classify(t: &TreeDecomposition, atoms: &[VarSet]) -> DecompositionClass {
    let n = t.vars().max().map_or(0, |m| m + 1);
    let mut g = Graph::new(n);
    for a in atoms {
        let vs: Vec<usize> = a.iter().collect();
        for (i, &u) in vs.iter().enumerate() {
            for &v in &vs[i + 1..] {
                g.add_edge(u, v);
            }
        }
    }
    let chordal = t.bags().iter().all(|&b| g.is_clique(b));
    let acyclic = t.bags().iter().all(|b| atoms.contains(b)) || gyo_reduces(atoms.to_vec());
    let seps = t
        .edges()
        .iter()
        .map(|&(a, b)| t.bags()[a].intersection(t.bags()[b]).len());
    let simple = seps.clone().all(|s| s <= 1);
    let totally_disconnected = seps.clone().all(|s| s == 0);
    DecompositionClass {
        chordal: chordal || acyclic,
        acyclic,
        simple: simple || totally_disconnected,
        totally_disconnected,
    }
}

/// `E_T = Σ_t h(χ(t) | χ(t) ∩ χ(parent(t)))`, expanded into unconditioned
/// coefficients over `n` variables.
pub fn et_expression(t: &TreeDecomposition, n: usize) -> LinearExpression {
    let mut e = LinearExpression::zero(n);
    for (node, &bag) in t.bags().iter().enumerate() {
        let sep = t
            .parent(node)
            .map_or(VarSet::EMPTY, |p| bag.intersection(t.bags()[p]));
        e.add_conditional(bag, sep, &Rational::one());
    }
    e
}

/// Conditional-form terms `(Y, X)` of `E_T`, one per node: `h(Y | X)` with
/// `X = χ(t) ∩ χ(parent(t))`.
pub fn et_conditional_terms(t: &TreeDecomposition) -> Vec<(VarSet, VarSet)> {
    t.bags()
        .iter()
        .enumerate()
        .map(|(node, &bag)| {
            (
                bag,
                t.parent(node)
                    .map_or(VarSet::EMPTY, |p| bag.intersection(t.bags()[p])),
            )
        })
        .collect()
}

/// Inclusion–exclusion form: `Σ_{S ≠ ∅} (-1)^{|S|+1} CC(S) · h(∩_{t∈S} χ(t))`,
/// where `CC(S)` counts the connected components among the nodes whose bag
/// meets `∪_{t∈S} χ(t)`.
pub fn et_inclusion_exclusion(t: &TreeDecomposition, n: usize) -> LinearExpression {
    let m = t.num_nodes();
    assert!(m <= 24, "inclusion-exclusion over {m} nodes is too large");
    let mut e = LinearExpression::zero(n);
    for s in 1u32..(1u32 << m) {
        let members: Vec<usize> = (0..m).filter(|i| s >> i & 1 == 1).collect();
        let inter = members
            .iter()
            .fold(VarSet::full(n), |a, &i| a.intersection(t.bags()[i]));
        if inter.is_empty() {
            continue;
        }
        let uni = members
            .iter()
            .fold(VarSet::EMPTY, |a, &i| a.union(t.bags()[i]));
        let touching: Vec<bool> = t.bags().iter().map(|b| !b.is_disjoint(uni)).collect();
        let cc = t.component_count(&touching);
        let sign = if members.len() % 2 == 1 { 1 } else { -1 };
        e.add_term(inter, &Rational::from_integer((sign * cc as i64).into()));
    }
    e
}

/// True when the expression has no nonzero coefficient.
pub fn is_zero_expression(e: &LinearExpression) -> bool {
    e.coeffs().values().all(Zero::is_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn vs(v: &[usize]) -> VarSet {
        VarSet::from_iter(v.iter().copied())
    }

    #[test]
    fn chordality() {
        assert!(is_chordal(&Graph::complete(3)).0);
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(is_chordal(&c4), (false, None));
        let q2 = parse_query("Q2 :- A(y1,y2), B(y1,y3), C(y4,y2).", None).unwrap();
        let (ok, peo) = is_chordal(&gaifman_graph(&q2));
        assert!(ok);
        assert_eq!(peo.unwrap().len(), 4);
    }

    #[test]
    fn junction_tree_of_normal_database_q2() {
        let q2 = parse_query("Q2 :- A(y1,y2), B(y1,y3), C(y4,y2).", None).unwrap();
        let t = junction_tree(&q2).unwrap();
        // y1=0, y2=1, y3=2, y4=3
        assert_eq!(t.bags(), &[vs(&[0, 1]), vs(&[0, 2]), vs(&[1, 3])]);
        assert_eq!(t.edges(), &[(0, 1), (0, 2)]);
        let c = classify(&t, &q2.atom_sets());
        assert!(c.simple && c.acyclic && c.chordal && !c.totally_disconnected);
    }

    #[test]
    fn junction_tree_of_vee_and_triangle() {
        let q = parse_query("Q2 :- R(y1,y2), R(y1,y3).", None).unwrap();
        let t = junction_tree(&q).unwrap();
        assert_eq!(t.bags(), &[vs(&[0, 1]), vs(&[0, 2])]);
        assert_eq!(t.edges(), &[(0, 1)]);
        let tri = parse_query("Q :- R(x,y), R(y,z), R(z,x).", None).unwrap();
        let t = junction_tree(&tri).unwrap();
        assert_eq!(t.bags(), &[vs(&[0, 1, 2])]);
        let c4 = parse_query("Q :- R(a,b), R(b,c), R(c,d), R(d,a).", None).unwrap();
        assert_eq!(
            junction_tree(&c4).unwrap_err(),
            DecompositionError::NotChordal
        );
    }

    #[test]
    fn acyclicity() {
        let tri = parse_query("Q :- R(x,y), R(y,z), R(z,x).", None).unwrap();
        assert!(!is_acyclic(&tri));
        let q = parse_query("Q :- R(a,b,c), S(b,c,e).", None).unwrap();
        assert!(is_acyclic(&q));
        let t = junction_tree(&q).unwrap();
        assert!(!classify(&t, &q.atom_sets()).simple);
        let tri_cover = parse_query("Q :- R(x,y), R(y,z), R(z,x), T(x,y,z).", None).unwrap();
        assert!(is_acyclic(&tri_cover));
    }

    #[test]
    fn totally_disconnected() {
        let t = TreeDecomposition::new(vec![vs(&[0]), vs(&[1])], vec![]).unwrap();
        let c = classify(&t, &[vs(&[0]), vs(&[1])]);
        assert!(c.totally_disconnected && c.simple);
    }

    #[test]
    fn validation_failures() {
        let t = TreeDecomposition::new(
            vec![vs(&[0, 1]), vs(&[2]), vs(&[0, 2])],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        assert_eq!(
            t.validate(&[]),
            Err(DecompositionError::RunningIntersection(0))
        );
        let t = TreeDecomposition::new(vec![vs(&[0, 1]), vs(&[1, 2])], vec![(0, 1)]).unwrap();
        assert_eq!(
            t.validate(&[vs(&[0, 2])]),
            Err(DecompositionError::Uncovered(0))
        );
        assert_eq!(
            TreeDecomposition::new(vec![vs(&[0]); 3], vec![(0, 1), (1, 2), (2, 0)]).unwrap_err(),
            DecompositionError::NotForest
        );
    }

    #[test]
    fn et_for_vee_chain() {
        let t = TreeDecomposition::new(vec![vs(&[0, 1]), vs(&[0, 2])], vec![(0, 1)]).unwrap();
        let mut expected = LinearExpression::zero(3);
        expected.add_term(vs(&[0, 1]), &Rational::one());
        expected.add_term(vs(&[0, 2]), &Rational::one());
        expected.add_term(vs(&[0]), &-Rational::one());
        assert_eq!(et_expression(&t, 3), expected);
        assert_eq!(et_expression(&t.reroot(1), 3), expected);
        assert_eq!(et_inclusion_exclusion(&t, 3), expected);
    }

    #[test]
    fn et_single_bag() {
        let t = TreeDecomposition::trivial(2);
        let mut expected = LinearExpression::zero(2);
        expected.add_term(vs(&[0, 1]), &Rational::one());
        assert_eq!(et_expression(&t, 2), expected);
        assert_eq!(et_inclusion_exclusion(&t, 2), expected);
    }

    #[test]
    fn junction_tree_counts() {
        let path = parse_query("Q :- R(a,b), R(b,c), R(c,d).", None).unwrap();
        assert_eq!(enumerate_junction_trees(&path, 64).unwrap().len(), 1);
        let star = parse_query("Q :- R(c,a1,a2), R(c,b1,b2), R(c,d1,d2).", None).unwrap();
        let all = enumerate_junction_trees(&star, 64).unwrap();
        assert_eq!(all.len(), 3);
        for t in &all {
            t.validate(&star.atom_sets()).unwrap();
        }
        assert_eq!(enumerate_junction_trees(&star, 2).unwrap().len(), 2);
        let tri = parse_query("Q :- R(x,y), R(y,z), R(z,x).", None).unwrap();
        assert_eq!(enumerate_junction_trees(&tri, 64).unwrap().len(), 1);
    }

    #[test]
    fn text_roundtrip() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let t = TreeDecomposition::new(vec![vs(&[0, 1]), vs(&[1, 2])], vec![(0, 1)]).unwrap();
        let txt = t.to_text(&names);
        assert_eq!(txt, "bag 0: a b\nbag 1: b c\nedge 0 1\n");
        assert_eq!(TreeDecomposition::from_text(&txt, &names).unwrap(), t);
    }
}
