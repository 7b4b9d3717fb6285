//! Directed water-pipeline graphs: representation, tabular parsing,
//! pass-through junction contraction, and flow-direction traversal.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

/// Opaque node identifier, stable across simplification for retained nodes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl core::fmt::Display for NodeId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

/// One directed pipe: water flows `from -> to` over `length_m` meters.
#[derive(Clone, Debug, PartialEq)]
pub struct PipeSegment {
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("segment references unknown node `{0}`")]
    UnknownNode(String),
    #[error("segment `{from}` -> `{to}`: length must be positive, got {value}")]
    NonPositiveLength { from: String, to: String, value: f64 },
    #[error("duplicate segment `{from}` -> `{to}`")]
    DuplicateSegment { from: String, to: String },
    #[error("segment endpoints must differ, got `{0}` -> itself")]
    SelfLoop(String),
    #[error("unknown origin node `{0}`")]
    UnknownOrigin(String),
    #[error("nodes input line {line}: {message}")]
    NodeRow { line: usize, message: String },
    #[error("segments input line {line}: {message}")]
    SegmentRow { line: usize, message: String },
}

/// Directed graph of junction nodes and pipe segments.
///
/// Invariants enforced at construction: every segment endpoint exists, no
/// duplicate `(from, to)` pair, lengths strictly positive, endpoints distinct.
/// Parallel opposite-direction pairs (`a -> b` plus `b -> a`) are allowed and
/// are how undirected source data is represented.
#[derive(Clone, Debug)]
pub struct WaterNetwork {
    ids: Vec<NodeId>,
    coords: Vec<Option<(f64, f64)>>,
    index: BTreeMap<String, usize>,
    // (from, to, length), endpoints as node indices
    segs: Vec<(usize, usize, f64)>,
    seg_set: BTreeSet<(usize, usize)>,
    anchored: Vec<bool>,
}

impl WaterNetwork {
    pub fn new() -> Self {
        WaterNetwork {
            ids: Vec::new(),
            coords: Vec::new(),
            index: BTreeMap::new(),
            segs: Vec::new(),
            seg_set: BTreeSet::new(),
            anchored: Vec::new(),
        }
    }

    pub fn add_node(
        &mut self,
        id: impl Into<String>,
        coords: Option<(f64, f64)>,
    ) -> Result<usize, NetworkError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(NetworkError::DuplicateNode(id));
        }
        let idx = self.ids.len();
        self.index.insert(id.clone(), idx);
        self.ids.push(NodeId(id));
        self.coords.push(coords);
        self.anchored.push(false);
        Ok(idx)
    }

    pub fn add_segment(
        &mut self,
        from: &str,
        to: &str,
        length_m: f64,
    ) -> Result<(), NetworkError> {
        let fi = *self
            .index
            .get(from)
            .ok_or_else(|| NetworkError::UnknownNode(from.to_string()))?;
        let ti = *self
            .index
            .get(to)
            .ok_or_else(|| NetworkError::UnknownNode(to.to_string()))?;
        if fi == ti {
            return Err(NetworkError::SelfLoop(from.to_string()));
        }
        if !(length_m > 0.0) || !length_m.is_finite() {
            return Err(NetworkError::NonPositiveLength {
                from: from.to_string(),
                to: to.to_string(),
                value: length_m,
            });
        }
        if !self.seg_set.insert((fi, ti)) {
            return Err(NetworkError::DuplicateSegment {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        self.segs.push((fi, ti, length_m));
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segs.len()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id.as_str())
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id.as_str()).copied()
    }

    pub fn coords_of(&self, id: &NodeId) -> Option<(f64, f64)> {
        self.index_of(id).and_then(|i| self.coords[i])
    }

    pub fn coords_at(&self, index: usize) -> Option<(f64, f64)> {
        self.coords[index]
    }

    pub fn segments(&self) -> impl Iterator<Item = PipeSegment> + '_ {
        self.segs.iter().map(|&(f, t, l)| PipeSegment {
            from: self.ids[f].clone(),
            to: self.ids[t].clone(),
            length_m: l,
        })
    }

    /// Raw segments as `(from_index, to_index, length)`.
    pub fn segment_indices(&self) -> &[(usize, usize, f64)] {
        &self.segs
    }

    /// Mark a node as never removable by [`WaterNetwork::simplify`].
    pub fn anchor(&mut self, id: &NodeId) -> Result<(), NetworkError> {
        match self.index_of(id) {
            Some(i) => {
                self.anchored[i] = true;
                Ok(())
            }
            None => Err(NetworkError::UnknownNode(id.as_str().to_string())),
        }
    }

    pub fn is_anchored(&self, id: &NodeId) -> bool {
        self.index_of(id).map(|i| self.anchored[i]).unwrap_or(false)
    }

    pub fn anchored_ids(&self) -> Vec<NodeId> {
        self.ids
            .iter()
            .zip(&self.anchored)
            .filter(|(_, a)| **a)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Undirected neighbor sets, one per node index.
    fn neighbor_sets(&self) -> Vec<BTreeSet<usize>> {
        let mut nb = alloc::vec![BTreeSet::new(); self.ids.len()];
        for &(f, t, _) in &self.segs {
            nb[f].insert(t);
            nb[t].insert(f);
        }
        nb
    }

    /// The origin plus every node reachable by repeatedly following segment
    /// direction.
    pub fn downstream(&self, origin: &NodeId) -> Result<BTreeSet<NodeId>, NetworkError> {
        let start = self
            .index_of(origin)
            .ok_or_else(|| NetworkError::UnknownOrigin(origin.as_str().to_string()))?;
        let mut out_edges = alloc::vec![Vec::new(); self.ids.len()];
        for &(f, t, _) in &self.segs {
            out_edges[f].push(t);
        }
        let mut seen = alloc::vec![false; self.ids.len()];
        let mut stack = alloc::vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &out_edges[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        Ok(seen
            .iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| self.ids[i].clone())
            .collect())
    }

    /// Shortest directed path distance (meters) from `origin` to every
    /// reachable node; `None` for unreachable nodes. Dijkstra over positive
    /// lengths.
    pub fn downstream_distances(&self, origin: &NodeId) -> Result<Vec<Option<f64>>, NetworkError> {
        let start = self
            .index_of(origin)
            .ok_or_else(|| NetworkError::UnknownOrigin(origin.as_str().to_string()))?;
        let n = self.ids.len();
        let mut out_edges = alloc::vec![Vec::new(); n];
        for &(f, t, l) in &self.segs {
            out_edges[f].push((t, l));
        }
        let mut dist: Vec<Option<f64>> = alloc::vec![None; n];
        dist[start] = Some(0.0);
        // Ordered frontier keyed by (distance, node); fine at desk scale.
        let mut frontier: BTreeSet<(u64, usize)> = BTreeSet::new();
        frontier.insert((0, start));
        let key = |d: f64| -> u64 { d.to_bits() }; // distances are non-negative, bit order == value order
        while let Some(&(dk, v)) = frontier.iter().next() {
            frontier.remove(&(dk, v));
            let dv = f64::from_bits(dk);
            if let Some(best) = dist[v] {
                if dv > best {
                    continue;
                }
            }
            for &(w, l) in &out_edges[v] {
                let cand = dv + l;
                if dist[w].map_or(true, |cur| cand < cur) {
                    dist[w] = Some(cand);
                    frontier.insert((key(cand), w));
                }
            }
        }
        Ok(dist)
    }

    /// Partition of node ids into undirected connected components. Components
    /// are ordered by their smallest node index; ids within a component keep
    /// network order.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.ids.len();
        let nb = self.neighbor_sets();
        let mut comp = alloc::vec![usize::MAX; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = blocks.len();
            let mut members = alloc::vec![start];
            comp[start] = id;
            let mut stack = alloc::vec![start];
            while let Some(v) = stack.pop() {
                for &w in &nb[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            blocks.push(members);
        }
        blocks
            .into_iter()
            .map(|m| m.into_iter().map(|i| self.ids[i].clone()).collect())
            .collect()
    }

    /// Contract every non-anchored pass-through junction, repeating to a
    /// fixed point.
    ///
    /// A junction is contracted when it has exactly two distinct neighbors
    /// and its incident segments form either a directed chain (one inflow,
    /// one outflow) or a bidirectional pair in both directions; the two pipe
    /// lengths are summed into one replacement segment per direction. A
    /// contraction is skipped when it would create a self-loop, duplicate an
    /// existing `(from, to)` pair, or when the junction sits on a cycle made
    /// entirely of contractible junctions (contracting those would eventually
    /// empty the component).
    ///
    /// Contracting exactly these junctions is marginalization-exact for the
    /// distance-weighted precision: the simplified matrix equals the Schur
    /// complement of the original with respect to the removed rows.
    pub fn simplify(&self) -> WaterNetwork {
        let mut net = self.clone();
        loop {
            if !net.contract_one() {
                break;
            }
        }
        net
    }

    /// Attempt one contraction; returns whether the network changed.
    fn contract_one(&mut self) -> bool {
        let n = self.ids.len();
        // incident[v] = segment indices touching v
        let mut incident = alloc::vec![Vec::new(); n];
        for (si, &(f, t, _)) in self.segs.iter().enumerate() {
            incident[f].push(si);
            incident[t].push(si);
        }
        let plan = |v: usize| -> Option<ContractionPlan> {
            classify_junction(v, &incident[v], &self.segs, &self.anchored)
        };
        let candidate = alloc::vec::Vec::from_iter((0..n).map(|v| plan(v).is_some()));

        for v in 0..n {
            let Some(p) = plan(v) else { continue };
            if on_all_candidate_cycle(v, &p, &candidate, &incident, &self.segs) {
                continue;
            }
            // Refuse contractions that would collide with existing segments;
            // merging lengths there would break path-length preservation.
            let collides = p
                .replacements
                .iter()
                .any(|&(f, t, _)| self.seg_set.contains(&(f, t)));
            if collides {
                continue;
            }
            self.apply_contraction(v, &p);
            return true;
        }
        false
    }

    fn apply_contraction(&mut self, v: usize, plan: &ContractionPlan) {
        let mut removed: Vec<usize> = plan.removed_segments.clone();
        removed.sort_unstable_by(|a, b| b.cmp(a));
        for si in removed {
            let (f, t, _) = self.segs.remove(si);
            self.seg_set.remove(&(f, t));
        }
        for &(f, t, l) in &plan.replacements {
            self.seg_set.insert((f, t));
            self.segs.push((f, t, l));
        }
        // Drop node v and reindex.
        self.ids.remove(v);
        self.coords.remove(v);
        self.anchored.remove(v);
        let shift = |i: usize| if i > v { i - 1 } else { i };
        for seg in self.segs.iter_mut() {
            seg.0 = shift(seg.0);
            seg.1 = shift(seg.1);
        }
        self.seg_set = self.segs.iter().map(|&(f, t, _)| (f, t)).collect();
        self.index = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str().to_string(), i))
            .collect();
    }
}

impl Default for WaterNetwork {
    fn default() -> Self {
        Self::new()
    }
}

struct ContractionPlan {
    neighbors: (usize, usize),
    removed_segments: Vec<usize>,
    replacements: Vec<(usize, usize, f64)>,
}

/// Decide whether junction `v` is contractible and, if so, how.
fn classify_junction(
    v: usize,
    incident: &[usize],
    segs: &[(usize, usize, f64)],
    anchored: &[bool],
) -> Option<ContractionPlan> {
    if anchored[v] {
        return None;
    }
    let mut neighbors = BTreeSet::new();
    for &si in incident {
        let (f, t, _) = segs[si];
        neighbors.insert(if f == v { t } else { f });
    }
    if neighbors.len() != 2 {
        return None;
    }
    let mut it = neighbors.into_iter();
    let u = it.next().unwrap();
    let w = it.next().unwrap();

    match incident.len() {
        2 => {
            // Directed chain: exactly one inflow and one outflow.
            let (a, b) = (segs[incident[0]], segs[incident[1]]);
            let (inflow, outflow) = if a.1 == v && b.0 == v {
                (a, b)
            } else if b.1 == v && a.0 == v {
                (b, a)
            } else {
                return None; // both inflows or both outflows
            };
            Some(ContractionPlan {
                neighbors: (u, w),
                removed_segments: incident.to_vec(),
                replacements: alloc::vec![(inflow.0, outflow.1, inflow.2 + outflow.2)],
            })
        }
        4 => {
            // Bidirectional pair on each side.
            let find = |from: usize, to: usize| -> Option<f64> {
                incident.iter().find_map(|&si| {
                    let (f, t, l) = segs[si];
                    (f == from && t == to).then_some(l)
                })
            };
            let uv = find(u, v)?;
            let vu = find(v, u)?;
            let vw = find(v, w)?;
            let wv = find(w, v)?;
            Some(ContractionPlan {
                neighbors: (u, w),
                removed_segments: incident.to_vec(),
                replacements: alloc::vec![(u, w, uv + vw), (w, u, wv + vu)],
            })
        }
        _ => None,
    }
}

/// Walk the two-neighbor chain from `v`; if it returns to `v` through
/// contractible junctions only, `v` lies on a pure pass-through cycle.
fn on_all_candidate_cycle(
    v: usize,
    plan: &ContractionPlan,
    candidate: &[bool],
    incident: &[Vec<usize>],
    segs: &[(usize, usize, f64)],
) -> bool {
    let mut prev = v;
    let mut cur = plan.neighbors.0;
    loop {
        if cur == v {
            return true;
        }
        if !candidate[cur] {
            return false;
        }
        let mut nbs = BTreeSet::new();
        for &si in &incident[cur] {
            let (f, t, _) = segs[si];
            nbs.insert(if f == cur { t } else { f });
        }
        debug_assert_eq!(nbs.len(), 2);
        let next = nbs.into_iter().find(|&x| x != prev);
        match next {
            Some(nx) => {
                prev = cur;
                cur = nx;
            }
            None => return false, // both neighbors equal prev: not a simple cycle
        }
    }
}

/// Parse a network from two tabular text streams.
///
/// `nodes_stream` columns: `node_id,x,y` (coordinates may be empty).
/// `segments_stream` columns: `from_node,to_node,length_m`.
/// Both require a header line; line numbers in errors count from the header.
pub fn parse_network(
    nodes_stream: &str,
    segments_stream: &str,
) -> Result<WaterNetwork, NetworkError> {
    let mut net = WaterNetwork::new();

    for (lineno, line) in nodes_stream.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.trim();
        if lineno == 0 {
            expect_header(line, &["node_id", "x", "y"]).map_err(|message| {
                NetworkError::NodeRow {
                    line: line_no,
                    message,
                }
            })?;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(NetworkError::NodeRow {
                line: line_no,
                message: alloc::format!("expected 3 fields, got {}", fields.len()),
            });
        }
        if fields[0].is_empty() {
            return Err(NetworkError::NodeRow {
                line: line_no,
                message: "empty node_id".to_string(),
            });
        }
        let coords = match (fields[1].is_empty(), fields[2].is_empty()) {
            (true, true) => None,
            (false, false) => {
                let x = parse_f64(fields[1]).map_err(|message| NetworkError::NodeRow {
                    line: line_no,
                    message,
                })?;
                let y = parse_f64(fields[2]).map_err(|message| NetworkError::NodeRow {
                    line: line_no,
                    message,
                })?;
                Some((x, y))
            }
            _ => {
                return Err(NetworkError::NodeRow {
                    line: line_no,
                    message: "coordinates must be both present or both empty".to_string(),
                })
            }
        };
        net.add_node(fields[0], coords)?;
    }

    for (lineno, line) in segments_stream.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.trim();
        if lineno == 0 {
            expect_header(line, &["from_node", "to_node", "length_m"]).map_err(|message| {
                NetworkError::SegmentRow {
                    line: line_no,
                    message,
                }
            })?;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(NetworkError::SegmentRow {
                line: line_no,
                message: alloc::format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let length = parse_f64(fields[2]).map_err(|message| NetworkError::SegmentRow {
            line: line_no,
            message,
        })?;
        if !(length > 0.0) || !length.is_finite() {
            return Err(NetworkError::SegmentRow {
                line: line_no,
                message: alloc::format!("length must be positive, got {}", fields[2]),
            });
        }
        net.add_segment(fields[0], fields[1], length)?;
    }

    Ok(net)
}

fn expect_header(line: &str, expected: &[&str]) -> Result<(), String> {
    let got: Vec<&str> = line.split(',').map(str::trim).collect();
    if got != expected {
        return Err(alloc::format!(
            "expected header `{}`, got `{}`",
            expected.join(","),
            line
        ));
    }
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| alloc::format!("invalid number `{s}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_three_nodes() -> WaterNetwork {
        // Shared junction with two pipes: a->b (10 m), a->c (30 m).
        parse_network(
            "node_id,x,y\na,0,0\nb,10,0\nc,0,30\n",
            "from_node,to_node,length_m\na,b,10\na,c,30\n",
        )
        .unwrap()
    }

    #[test]
    fn parse_three_node_fixture() {
        let net = fixture_three_nodes();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.segment_count(), 2);
        assert_eq!(net.coords_of(&NodeId::from("c")), Some((0.0, 30.0)));
    }

    #[test]
    fn parse_single_node_no_segments() {
        let net = parse_network("node_id,x,y\nonly,,\n", "from_node,to_node,length_m\n").unwrap();
        assert_eq!(net.node_count(), 1);
        assert_eq!(net.segment_count(), 0);
        assert_eq!(net.coords_of(&NodeId::from("only")), None);
    }

    #[test]
    fn parse_unknown_endpoint_names_the_node() {
        let err = parse_network(
            "node_id,x,y\na,,\nb,,\n",
            "from_node,to_node,length_m\na,z,5\n",
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::UnknownNode("z".into()));
        assert!(alloc::format!("{err}").contains('z'));
    }

    #[test]
    fn parse_nonpositive_length_reports_line() {
        let err = parse_network(
            "node_id,x,y\na,,\nb,,\n",
            "from_node,to_node,length_m\na,b,5\nb,a,0\n",
        )
        .unwrap_err();
        match err {
            NetworkError::SegmentRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_duplicate_node_rejected() {
        let err = parse_network("node_id,x,y\na,,\na,,\n", "from_node,to_node,length_m\n")
            .unwrap_err();
        assert_eq!(err, NetworkError::DuplicateNode("a".into()));
    }

    #[test]
    fn duplicate_segment_rejected() {
        let mut net = WaterNetwork::new();
        net.add_node("a", None).unwrap();
        net.add_node("b", None).unwrap();
        net.add_segment("a", "b", 1.0).unwrap();
        let err = net.add_segment("a", "b", 2.0).unwrap_err();
        assert!(matches!(err, NetworkError::DuplicateSegment { .. }));
        // opposite direction is fine
        net.add_segment("b", "a", 2.0).unwrap();
    }

    fn chain(lengths: &[f64]) -> WaterNetwork {
        let mut net = WaterNetwork::new();
        for i in 0..=lengths.len() {
            net.add_node(alloc::format!("n{i}"), None).unwrap();
        }
        for (i, &l) in lengths.iter().enumerate() {
            net.add_segment(&alloc::format!("n{i}"), &alloc::format!("n{}", i + 1), l)
                .unwrap();
        }
        net
    }

    #[test]
    fn simplify_sums_chain_lengths() {
        let net = chain(&[5.0, 7.0]);
        let simple = net.simplify();
        assert_eq!(simple.node_count(), 2);
        let segs: Vec<PipeSegment> = simple.segments().collect();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].from.as_str(), "n0");
        assert_eq!(segs[0].to.as_str(), "n2");
        assert_eq!(segs[0].length_m, 12.0);
    }

    #[test]
    fn simplify_keeps_anchored_junction() {
        let mut net = chain(&[5.0, 7.0]);
        net.anchor(&NodeId::from("n1")).unwrap();
        let simple = net.simplify();
        assert_eq!(simple.node_count(), 3);
        assert_eq!(simple.segment_count(), 2);
    }

    #[test]
    fn simplify_leaves_pure_cycle_alone() {
        let mut net = WaterNetwork::new();
        for i in 0..4 {
            net.add_node(alloc::format!("c{i}"), None).unwrap();
        }
        for i in 0..4 {
            net.add_segment(&alloc::format!("c{i}"), &alloc::format!("c{}", (i + 1) % 4), 1.0)
                .unwrap();
        }
        let simple = net.simplify();
        assert_eq!(simple.node_count(), 4);
        assert_eq!(simple.segment_count(), 4);
    }

    #[test]
    fn simplify_contracts_bidirectional_junctions() {
        let mut net = WaterNetwork::new();
        for id in ["a", "x", "b"] {
            net.add_node(id, None).unwrap();
        }
        for (f, t, l) in [
            ("a", "x", 5.0),
            ("x", "a", 5.0),
            ("x", "b", 7.0),
            ("b", "x", 7.0),
        ] {
            net.add_segment(f, t, l).unwrap();
        }
        let simple = net.simplify();
        assert_eq!(simple.node_count(), 2);
        let mut segs: Vec<(String, String, f64)> = simple
            .segments()
            .map(|s| (s.from.as_str().into(), s.to.as_str().into(), s.length_m))
            .collect();
        segs.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(
            segs,
            alloc::vec![
                ("a".to_string(), "b".to_string(), 12.0),
                ("b".to_string(), "a".to_string(), 12.0)
            ]
        );
    }

    #[test]
    fn simplify_skips_converging_inflows() {
        // u -> v <- w cannot be contracted without inventing a direction.
        let mut net = WaterNetwork::new();
        for id in ["u", "v", "w"] {
            net.add_node(id, None).unwrap();
        }
        net.add_segment("u", "v", 3.0).unwrap();
        net.add_segment("w", "v", 4.0).unwrap();
        let simple = net.simplify();
        assert_eq!(simple.node_count(), 3);
    }

    #[test]
    fn simplify_skips_collision_with_existing_segment() {
        // a -> x -> b plus a direct a -> b: contraction would duplicate (a, b).
        let mut net = WaterNetwork::new();
        for id in ["a", "x", "b"] {
            net.add_node(id, None).unwrap();
        }
        net.add_segment("a", "x", 5.0).unwrap();
        net.add_segment("x", "b", 7.0).unwrap();
        net.add_segment("a", "b", 100.0).unwrap();
        let simple = net.simplify();
        assert_eq!(simple.node_count(), 3);
        assert_eq!(simple.segment_count(), 3);
    }

    #[test]
    fn simplify_is_idempotent() {
        let net = chain(&[1.0, 2.0, 3.0, 4.0]);
        let once = net.simplify();
        let twice = once.simplify();
        assert_eq!(once.node_count(), twice.node_count());
        let a: Vec<PipeSegment> = once.segments().collect();
        let b: Vec<PipeSegment> = twice.segments().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn simplify_preserves_path_length() {
        let net = chain(&[2.0, 3.0, 5.0, 8.0]);
        let total: f64 = net.segments().map(|s| s.length_m).sum();
        let simple = net.simplify();
        let total_after: f64 = simple.segments().map(|s| s.length_m).sum();
        assert_eq!(total, total_after);
        assert_eq!(simple.node_count(), 2);
    }

    #[test]
    fn downstream_chain() {
        let net = chain(&[1.0, 1.0]);
        let from_source = net.downstream(&NodeId::from("n0")).unwrap();
        assert_eq!(from_source.len(), 3);
        let from_sink = net.downstream(&NodeId::from("n2")).unwrap();
        assert_eq!(from_sink.len(), 1);
        assert!(from_sink.contains(&NodeId::from("n2")));
    }

    #[test]
    fn downstream_unknown_origin() {
        let net = chain(&[1.0]);
        assert_eq!(
            net.downstream(&NodeId::from("missing")).unwrap_err(),
            NetworkError::UnknownOrigin("missing".into())
        );
    }

    #[test]
    fn downstream_distances_shortest_path() {
        // Two routes n0 -> n2: direct 10 m, via n1 3 + 4 = 7 m.
        let mut net = WaterNetwork::new();
        for id in ["n0", "n1", "n2"] {
            net.add_node(id, None).unwrap();
        }
        net.add_segment("n0", "n2", 10.0).unwrap();
        net.add_segment("n0", "n1", 3.0).unwrap();
        net.add_segment("n1", "n2", 4.0).unwrap();
        let d = net.downstream_distances(&NodeId::from("n0")).unwrap();
        assert_eq!(d[0], Some(0.0));
        assert_eq!(d[1], Some(3.0));
        assert_eq!(d[2], Some(7.0));
    }

    #[test]
    fn components_of_fixture_form_one_block() {
        let net = fixture_three_nodes();
        let comps = net.connected_components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 3);
    }

    #[test]
    fn components_two_disjoint_edges() {
        let mut net = WaterNetwork::new();
        for id in ["a", "b", "c", "d"] {
            net.add_node(id, None).unwrap();
        }
        net.add_segment("a", "b", 1.0).unwrap();
        net.add_segment("c", "d", 1.0).unwrap();
        assert_eq!(net.connected_components().len(), 2);
    }

    #[test]
    fn components_empty_network() {
        let net = WaterNetwork::new();
        assert!(net.connected_components().is_empty());
    }
}
