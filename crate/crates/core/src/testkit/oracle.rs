//! Reference implementations that share no code with the analyses they
//! check: boolean transitive closure, exhaustive tree-mapping search, and
//! change sets and reachability read off library models.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::callgraph::CallGraph;
use crate::construct::{CType, ConstructId};
use crate::diff::ChangeOp;
use crate::tree::Tree;

use super::{graph_node, LibModel};

/// Reflexive-transitive closure over nodes `graph_node(0..n)`, by the
/// Warshall recurrence.
pub fn closure(g: &CallGraph, n: usize) -> Vec<Vec<bool>> {
    let index: BTreeMap<ConstructId, usize> = (0..n).map(|i| (graph_node(i), i)).collect();
    let mut m = vec![vec![false; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in g.edges() {
        m[index[&e.caller]][index[&e.callee]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                let via = m[k].clone();
                for (cell, &hop) in m[i].iter_mut().zip(&via) {
                    *cell |= hop;
                }
            }
        }
    }
    m
}

/// Every ordered tree shape with `n` nodes, labelled `a`.
pub fn shapes(n: usize) -> Vec<Tree> {
    forests(n - 1)
        .into_iter()
        .map(|children| Tree {
            label: "a".into(),
            children,
        })
        .collect()
}

fn forests(n: usize) -> Vec<Vec<Tree>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for k in 1..=n {
        for t in shapes(k) {
            for rest in forests(n - k) {
                let mut f = vec![t.clone()];
                f.extend(rest);
                out.push(f);
            }
        }
    }
    out
}

fn relabel(t: &Tree, labels: &mut impl Iterator<Item = char>) -> Tree {
    Tree {
        label: labels.next().expect("label").to_string(),
        children: t.children.iter().map(|c| relabel(c, labels)).collect(),
    }
}

/// Every labelling of every shape with up to `max` nodes over `alphabet`.
pub fn labelled(max: usize, alphabet: &[char]) -> Vec<Tree> {
    let mut out = Vec::new();
    for n in 1..=max {
        for s in shapes(n) {
            let combos = alphabet.len().pow(n as u32);
            for mut code in 0..combos {
                let mut labels = Vec::with_capacity(n);
                for _ in 0..n {
                    labels.push(alphabet[code % alphabet.len()]);
                    code /= alphabet.len();
                }
                out.push(relabel(&s, &mut labels.into_iter()));
            }
        }
    }
    out
}

struct Flat {
    labels: Vec<String>,
    /// `anc[i][j]`: i is a proper ancestor of j, in preorder numbering.
    anc: Vec<Vec<bool>>,
}

fn flatten(t: &Tree) -> Flat {
    fn walk(
        t: &Tree,
        path: &mut Vec<usize>,
        labels: &mut Vec<String>,
        pairs: &mut Vec<(usize, usize)>,
    ) {
        let me = labels.len();
        labels.push(t.label.clone());
        for &a in path.iter() {
            pairs.push((a, me));
        }
        path.push(me);
        for c in &t.children {
            walk(c, path, labels, pairs);
        }
        path.pop();
    }
    let (mut labels, mut pairs) = (Vec::new(), Vec::new());
    walk(t, &mut Vec::new(), &mut labels, &mut pairs);
    let n = labels.len();
    let mut anc = vec![vec![false; n]; n];
    for (a, b) in pairs {
        anc[a][b] = true;
    }
    Flat { labels, anc }
}

/// Minimum cost over all mappings that preserve ancestry and sibling order:
/// unmapped nodes are deleted or inserted, mapped nodes with different
/// labels are relabelled. Exponential; meant for trees of a few nodes.
pub fn mapping_distance(a: &Tree, b: &Tree) -> usize {
    let (fa, fb) = (flatten(a), flatten(b));
    let mut best = fa.labels.len() + fb.labels.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; fb.labels.len()];

    struct Search<'a> {
        fa: &'a Flat,
        fb: &'a Flat,
    }

    impl Search<'_> {
        fn go(
            &self,
            i: usize,
            cost: usize,
            pairs: &mut Vec<(usize, usize)>,
            used: &mut [bool],
            best: &mut usize,
        ) {
            let (na, nb) = (self.fa.labels.len(), self.fb.labels.len());
            let unmatched_b = nb - pairs.len();
            if cost + unmatched_b.saturating_sub(na - i) >= *best {
                return;
            }
            if i == na {
                *best = cost + unmatched_b;
                return;
            }
            for j in 0..nb {
                if used[j] {
                    continue;
                }
                let ok = pairs
                    .iter()
                    .all(|&(pi, pj)| pj < j && self.fa.anc[pi][i] == self.fb.anc[pj][j]);
                if !ok {
                    continue;
                }
                used[j] = true;
                pairs.push((i, j));
                let relabel = usize::from(self.fa.labels[i] != self.fb.labels[j]);
                self.go(i + 1, cost + relabel, pairs, used, best);
                pairs.pop();
                used[j] = false;
            }
            self.go(i + 1, cost + 1, pairs, used, best);
        }
    }

    Search { fa: &fa, fb: &fb }.go(0, 0, &mut pairs, &mut used, &mut best);
    best
}

/// Expected `(op, id)` pairs between two versions of a model whose class
/// lists match: a method changes when its model differs, a class when its
/// method list differs. Packages and default constructors never change.
pub fn expected_changes(a: &LibModel, b: &LibModel) -> BTreeSet<(ChangeOp, ConstructId)> {
    let mut out = BTreeSet::new();
    for (ca, cb) in a.classes.iter().zip(&b.classes) {
        assert_eq!(ca.name, cb.name, "class lists differ");
        if ca.methods != cb.methods {
            out.insert((
                ChangeOp::Mod,
                ConstructId::new(CType::Class, format!("{}.{}", a.package, ca.name)),
            ));
        }
        for m in &ca.methods {
            match cb.methods.iter().find(|x| x.name == m.name) {
                None => {
                    out.insert((ChangeOp::Del, a.method_id(&ca.name, &m.name)));
                }
                Some(n) if n != m => {
                    out.insert((ChangeOp::Mod, a.method_id(&ca.name, &m.name)));
                }
                Some(_) => {}
            }
        }
        for m in &cb.methods {
            if !ca.methods.iter().any(|x| x.name == m.name) {
                out.insert((ChangeOp::Add, a.method_id(&ca.name, &m.name)));
            }
        }
    }
    out
}

/// Methods of `lib` reachable through its own call lists from `roots`,
/// roots included.
pub fn model_reach(
    lib: &LibModel,
    roots: impl IntoIterator<Item = (String, String)>,
) -> BTreeSet<(String, String)> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<(String, String)> = roots.into_iter().collect();
    while let Some(r) = queue.pop_front() {
        if !seen.insert(r.clone()) {
            continue;
        }
        if let Some(m) = lib.method(&r.0, &r.1) {
            queue.extend(m.calls.iter().cloned());
        }
    }
    seen
}
