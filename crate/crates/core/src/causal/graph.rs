use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// JSON form: `{"nodes": [...], "edges": [[cause, effect], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// Directed acyclic graph over named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl CausalGraph {
    /// Validates endpoints and acyclicity.
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut names = Vec::with_capacity(nodes.len());
        for n in nodes {
            let n = n.as_ref().to_string();
            if index.insert(n.clone(), names.len()).is_some() {
                return Err(Error::Graph(format!("duplicate node `{n}`")));
            }
            names.push(n);
        }
        let mut parents = vec![Vec::new(); names.len()];
        let mut children = vec![Vec::new(); names.len()];
        for (a, b) in edges {
            let lookup = |s: &str| {
                index
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::Graph(format!("edge endpoint `{s}` is not a node")))
            };
            let (u, v) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
            if u == v {
                return Err(Error::Graph(format!("self-loop on `{}`", names[u])));
            }
            if !children[u].contains(&v) {
                children[u].push(v);
                parents[v].push(u);
            }
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let g = CausalGraph {
            nodes: names,
            index,
            parents,
            children,
        };
        if let Some(cycle) = g.find_cycle() {
            let path: Vec<&str> = cycle.iter().map(|&i| g.nodes[i].as_str()).collect();
            return Err(Error::Graph(format!("cycle {}", path.join(" -> "))));
        }
        Ok(g)
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        CausalGraph::new(&spec.nodes, &spec.edges)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            nodes: self.nodes.clone(),
            edges: self.edges(),
        }
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (u, ch) in self.children.iter().enumerate() {
            for &v in ch {
                out.push((self.nodes[u].clone(), self.nodes[v].clone()));
            }
        }
        out
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Graph(format!("unknown node `{name}`")))
    }

    pub fn name(&self, id: usize) -> &str {
        &self.nodes[id]
    }

    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    /// Returns a directed cycle as a node sequence (first node repeated at the end).
    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            stack.push((root, 0));
            state[root] = 1;
            while let Some(top) = stack.last_mut() {
                let (u, next) = *top;
                if next < self.children[u].len() {
                    top.1 += 1;
                    let v = self.children[u][next];
                    match state[v] {
                        0 => {
                            state[v] = 1;
                            stack.push((v, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|&(w, _)| w == v).unwrap();
                            let mut cycle: Vec<usize> = stack[start..].iter().map(|&(w, _)| w).collect();
                            cycle.push(v);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[u] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Nodes reachable from `from` by directed paths, including `from`.
    pub fn descendants(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.children[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Ancestors of any node in `set`, including the set itself.
    fn ancestors_of_set(&self, set: &[bool]) -> Vec<bool> {
        let mut seen = set.to_vec();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| set[i]).collect();
        while let Some(u) = queue.pop_front() {
            for &p in &self.parents[u] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// The same graph with every edge out of `node` deleted.
    pub fn without_outgoing(&self, node: usize) -> CausalGraph {
        let mut g = self.clone();
        for &c in &self.children[node] {
            g.parents[c].retain(|&p| p != node);
        }
        g.children[node].clear();
        g
    }

    /// The graph plus a new root node with edges to `targets`.
    pub fn with_common_cause(&self, name: &str, targets: &[&str]) -> Result<CausalGraph> {
        let mut nodes = self.nodes.clone();
        nodes.push(name.to_string());
        let mut edges = self.edges();
        for t in targets {
            self.id(t)?;
            edges.push((name.to_string(), t.to_string()));
        }
        CausalGraph::new(&nodes, &edges)
    }

    fn d_separated_ids(&self, x: usize, y: usize, z: &[bool]) -> bool {
        // reachable-trail search over (node, arrived_from_child) states;
        // a collider passes only if it is an ancestor of the conditioning set
        let anc = self.ancestors_of_set(z);
        let n = self.len();
        let mut visited = vec![[false; 2]; n];
        // up = travelling against edge direction (arrived from a child)
        let mut queue = VecDeque::from([(x, true)]);
        while let Some((u, up)) = queue.pop_front() {
            let slot = usize::from(up);
            if visited[u][slot] {
                continue;
            }
            visited[u][slot] = true;
            if u == y {
                return false;
            }
            if up {
                if !z[u] {
                    for &p in &self.parents[u] {
                        queue.push_back((p, true));
                    }
                    for &c in &self.children[u] {
                        queue.push_back((c, false));
                    }
                }
            } else {
                // arrived from a parent
                if !z[u] {
                    for &c in &self.children[u] {
                        queue.push_back((c, false));
                    }
                }
                if anc[u] {
                    for &p in &self.parents[u] {
                        queue.push_back((p, true));
                    }
                }
            }
        }
        true
    }

    /// Whether `x` and `y` are d-separated given `z`.
    pub fn d_separated(&self, x: &str, y: &str, z: &[&str]) -> Result<bool> {
        let (xi, yi) = (self.id(x)?, self.id(y)?);
        if xi == yi {
            return Err(Error::Graph("d-separation needs two distinct nodes".into()));
        }
        let mut mask = vec![false; self.len()];
        for name in z {
            mask[self.id(name)?] = true;
        }
        if mask[xi] || mask[yi] {
            return Err(Error::Graph(
                "conditioning set must exclude the queried nodes".into(),
            ));
        }
        Ok(self.d_separated_ids(xi, yi, &mask))
    }

    pub(crate) fn d_separated_mask(&self, x: usize, y: usize, z: &[bool]) -> bool {
        self.d_separated_ids(x, y, z)
    }
}

/// All minimal backdoor adjustment sets for `treatment → outcome` with at
/// most `max_size` members.
///
/// A set is valid when it contains no descendant of the treatment and
/// d-separates treatment and outcome once the treatment's outgoing edges are
/// removed; it is minimal when no proper subset is valid. Sets come out in
/// order of size, then lexicographically by member names. `[[]]` means no
/// backdoor path exists; an empty list means nothing of size ≤ `max_size`
/// works.
pub fn backdoor_sets(
    g: &CausalGraph,
    treatment: &str,
    outcome: &str,
    max_size: usize,
) -> Result<Vec<Vec<String>>> {
    backdoor_sets_among(g, treatment, outcome, max_size, |_| true)
}

/// As [`backdoor_sets`], drawing members only from nodes accepted by
/// `observed` (latent nodes cannot be adjusted for).
pub fn backdoor_sets_among(
    g: &CausalGraph,
    treatment: &str,
    outcome: &str,
    max_size: usize,
    observed: impl Fn(&str) -> bool,
) -> Result<Vec<Vec<String>>> {
    let (t, y) = (g.id(treatment)?, g.id(outcome)?);
    if t == y {
        return Err(Error::Graph("treatment and outcome must differ".into()));
    }
    let desc = g.descendants(t);
    let mut candidates: Vec<usize> = (0..g.len())
        .filter(|&i| i != y && !desc[i] && observed(g.name(i)))
        .collect();
    candidates.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    let cut = g.without_outgoing(t);

    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut mask = vec![false; g.len()];
    for size in 0..=max_size.min(candidates.len()) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let set: Vec<usize> = combo.iter().map(|&k| candidates[k]).collect();
            let has_valid_subset = found
                .iter()
                .any(|f| f.iter().all(|m| set.contains(m)));
            if !has_valid_subset {
                mask.iter_mut().for_each(|b| *b = false);
                set.iter().for_each(|&i| mask[i] = true);
                if cut.d_separated_mask(t, y, &mask) {
                    found.push(set);
                }
            }
            if !next_combination(&mut combo, candidates.len()) {
                break;
            }
        }
    }
    Ok(found
        .into_iter()
        .map(|s| s.iter().map(|&i| g.name(i).to_string()).collect())
        .collect())
}

/// Advances `combo` to the next k-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
