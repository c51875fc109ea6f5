//! Ordered tree edit distance with unit costs (Zhang and Shasha, 1989).

use crate::tree::Tree;

struct Postorder<'a> {
    labels: Vec<&'a str>,
    /// Postorder index of the leftmost leaf of each node's subtree.
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Postorder<'a> {
    fn new(t: &'a Tree) -> Self {
        let mut p = Postorder {
            labels: Vec::new(),
            lml: Vec::new(),
            keyroots: Vec::new(),
        };
        p.walk(t);
        // a keyroot is the highest node with a given leftmost leaf
        let n = p.labels.len();
        let mut seen = vec![false; n];
        for i in (0..n).rev() {
            if !seen[p.lml[i]] {
                seen[p.lml[i]] = true;
                p.keyroots.push(i);
            }
        }
        p.keyroots.reverse();
        p
    }

    fn walk(&mut self, t: &'a Tree) -> usize {
        let mut first = None;
        for c in &t.children {
            let l = self.walk(c);
            first.get_or_insert(l);
        }
        let idx = self.labels.len();
        self.labels.push(&t.label);
        let l = first.unwrap_or(idx);
        self.lml.push(l);
        l
    }
}

pub fn tree_edit_distance(a: &Tree, b: &Tree) -> usize {
    let a = Postorder::new(a);
    let b = Postorder::new(b);
    let (n, m) = (a.labels.len(), b.labels.len());
    let mut td = vec![vec![0usize; m]; n];
    let mut fd = vec![vec![0usize; m + 1]; n + 1];
    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.lml[i], b.lml[j]);
            // fd[x][y]: forest a[li..li+x) against b[lj..lj+y)
            fd[0][0] = 0;
            for x in 1..=i - li + 1 {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..=j - lj + 1 {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..=i - li + 1 {
                let ai = li + x - 1;
                for y in 1..=j - lj + 1 {
                    let bj = lj + y - 1;
                    let del = fd[x - 1][y] + 1;
                    let ins = fd[x][y - 1] + 1;
                    if a.lml[ai] == li && b.lml[bj] == lj {
                        let relabel = usize::from(a.labels[ai] != b.labels[bj]);
                        let v = del.min(ins).min(fd[x - 1][y - 1] + relabel);
                        fd[x][y] = v;
                        td[ai][bj] = v;
                    } else {
                        let px = a.lml[ai] - li;
                        let py = b.lml[bj] - lj;
                        fd[x][y] = del.min(ins).min(fd[px][py] + td[ai][bj]);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}
