use std::collections::{HashMap, VecDeque};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Bounding box [x0, x1] x [y0, y1] of the reduced Oldenburg network.
pub const OLDENBURG_BBOX: BBox = BBox {
    x0: 3619.0,
    x1: 4081.0,
    y0: 3542.0,
    y1: 4158.0,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BBox {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoadClass {
    Main,
    Secondary,
}

impl RoadClass {
    /// Free-flow speed in m/s (50 and 30 km/h).
    pub fn speed(self) -> f64 {
        match self {
            RoadClass::Main => 50.0 / 3.6,
            RoadClass::Secondary => 30.0 / 3.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
    pub length_m: f64,
    /// Free-flow travel time in seconds.
    pub t_free: f64,
    pub class: RoadClass,
    /// Row of the input file this edge came from.
    pub source_id: String,
}

#[derive(Debug, Clone)]
pub struct RoadNetwork {
    pub node_ids: Vec<String>,
    pub coords: Vec<(f64, f64)>,
    pub edges: Vec<DirectedEdge>,
    /// Per-capita capacity of every edge.
    pub f: Vec<f64>,
    /// Peak duration.
    pub h: f64,
    /// Caps on sigma_e.
    pub caps: Vec<f64>,
}

impl RoadNetwork {
    /// Network with the default capacities, peak duration and vacuous caps.
    pub fn new(node_ids: Vec<String>, coords: Vec<(f64, f64)>, edges: Vec<DirectedEdge>) -> Result<Self> {
        let v = node_ids.len();
        if v == 0 {
            return Err(Error::Network("network has no nodes".into()));
        }
        if let Some(e) = edges.iter().find(|e| e.from >= v || e.to >= v || e.from == e.to) {
            return Err(Error::Network(format!("edge {} has invalid endpoints", e.source_id)));
        }
        if let Some(e) = edges.iter().find(|e| !(e.t_free > 0.0)) {
            return Err(Error::Network(format!("edge {} has nonpositive free-flow time", e.source_id)));
        }
        let e = edges.len();
        let net = Self {
            node_ids,
            coords,
            edges,
            f: vec![super::DEFAULT_F; e],
            h: super::DEFAULT_H,
            caps: vec![1.0; e],
        };
        if !net.strongly_connected() {
            return Err(Error::Network("network is not strongly connected".into()));
        }
        Ok(net)
    }

    pub fn with_capacity(mut self, f: f64, h: f64) -> Result<Self> {
        if !(f > 0.0) || !(h > 0.0) {
            return Err(Error::Invalid("f and h must be positive".into()));
        }
        self.f = vec![f; self.edges.len()];
        self.h = h;
        Ok(self)
    }

    pub fn with_caps(mut self, caps: Vec<f64>) -> Result<Self> {
        if caps.len() != self.edges.len() || caps.iter().any(|k| !(0.0..=1.0).contains(k)) {
            return Err(Error::Invalid("need one cap in [0, 1] per edge".into()));
        }
        self.caps = caps;
        Ok(self)
    }

    pub fn vertices(&self) -> usize {
        self.node_ids.len()
    }

    pub fn directed_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of distinct input edges (each undirected edge counted once).
    pub fn undirected_edges(&self) -> usize {
        let mut ids: Vec<&str> = self.edges.iter().map(|e| e.source_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn endpoints(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }

    /// Vertex-by-edge incidence: -1 at the tail, +1 at the head.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.vertices(), self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            b[(e.from, k)] = -1.0;
            b[(e.to, k)] = 1.0;
        }
        b
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|v| v == id)
    }

    fn reach(&self, forward: bool) -> usize {
        let v = self.vertices();
        let mut adj = vec![Vec::new(); v];
        for e in &self.edges {
            if forward {
                adj[e.from].push(e.to);
            } else {
                adj[e.to].push(e.from);
            }
        }
        let mut seen = vec![false; v];
        seen[0] = true;
        let mut q = VecDeque::from([0]);
        let mut count = 1;
        while let Some(u) = q.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    q.push_back(w);
                }
            }
        }
        count
    }

    pub fn strongly_connected(&self) -> bool {
        let v = self.vertices();
        v > 0 && self.reach(true) == v && self.reach(false) == v
    }
}

/// Reads `nodes.csv` (id,x,y) and `edges.csv` (id,from,to,length_m,road_class).
/// Every input edge is undirected and becomes two directed edges. With a
/// bounding box, nodes outside it and the edges touching them are dropped.
pub fn load_network(nodes_file: &Path, edges_file: &Path, bbox: Option<BBox>) -> Result<RoadNetwork> {
    let nodes_name = nodes_file.display().to_string();
    let edges_name = edges_file.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(nodes_file)?;
    let mut node_ids = Vec::new();
    let mut coords = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let err = |msg: String| Error::Parse {
            file: nodes_name.clone(),
            line,
            msg,
        };
        if rec.len() < 3 {
            return Err(err("expected id,x,y".into()));
        }
        let x: f64 = rec[1].parse().map_err(|_| err(format!("bad x '{}'", &rec[1])))?;
        let y: f64 = rec[2].parse().map_err(|_| err(format!("bad y '{}'", &rec[2])))?;
        if bbox.is_some_and(|b| !b.contains(x, y)) {
            continue;
        }
        let id = rec[0].to_string();
        if index.insert(id.clone(), node_ids.len()).is_some() {
            return Err(err(format!("duplicate node id '{id}'")));
        }
        node_ids.push(id);
        coords.push((x, y));
    }
    if node_ids.is_empty() {
        return Err(Error::Network("no nodes left after filtering".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(edges_file)?;
    let mut edges = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let err = |msg: String| Error::Parse {
            file: edges_name.clone(),
            line,
            msg,
        };
        if rec.len() < 5 {
            return Err(err("expected id,from,to,length_m,road_class".into()));
        }
        let length: f64 = rec[3]
            .parse()
            .map_err(|_| err(format!("bad length '{}'", &rec[3])))?;
        if !(length > 0.0) {
            return Err(err("length must be positive".into()));
        }
        let class = match &rec[4] {
            "main" => RoadClass::Main,
            "secondary" => RoadClass::Secondary,
            other => return Err(err(format!("unknown road class '{other}'"))),
        };
        let (Some(&u), Some(&v)) = (index.get(&rec[1]), index.get(&rec[2])) else {
            if bbox.is_some() {
                continue;
            }
            return Err(err("edge references an unknown node".into()));
        };
        if u == v {
            continue;
        }
        let t_free = length / class.speed();
        for (a, b) in [(u, v), (v, u)] {
            edges.push(DirectedEdge {
                from: a,
                to: b,
                length_m: length,
                t_free,
                class,
                source_id: rec[0].to_string(),
            });
        }
    }
    RoadNetwork::new(node_ids, coords, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, nodes: &str, edges: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let (n, e) = (dir.join("nodes.csv"), dir.join("edges.csv"));
        fs::write(&n, nodes).unwrap();
        fs::write(&e, edges).unwrap();
        (n, e)
    }

    #[test]
    fn parallel_edges_become_four_directed_edges() {
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = write(
            dir.path(),
            "id,x,y\na,0,0\nb,100,0\n",
            "id,from,to,length_m,road_class\ne1,a,b,500,main\ne2, a , b ,300,secondary\n",
        );
        let net = load_network(&n, &e, None).unwrap();
        assert_eq!((net.vertices(), net.directed_edges(), net.undirected_edges()), (2, 4, 2));
        assert!(net.strongly_connected());
        assert!((net.edges[0].t_free - 36.0).abs() < 1e-12);
        assert!((net.edges[2].t_free - 36.0).abs() < 1e-12);
        let b = net.incidence();
        assert_eq!((b[(0, 0)], b[(1, 0)], b[(0, 1)], b[(1, 1)]), (-1.0, 1.0, 1.0, -1.0));
        assert_eq!(net.node_index("b"), Some(1));
    }

    #[test]
    fn bbox_filters_nodes_and_touching_edges() {
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = write(
            dir.path(),
            "id,x,y\na,0,0\nb,1,0\nc,9,9\n",
            "id,from,to,length_m,road_class\ne1,a,b,10,main\ne2,b,c,10,main\n",
        );
        let bbox = BBox { x0: -1.0, x1: 2.0, y0: -1.0, y1: 1.0 };
        let net = load_network(&n, &e, Some(bbox)).unwrap();
        assert_eq!((net.vertices(), net.undirected_edges()), (2, 1));
        let empty = BBox { x0: 50.0, x1: 60.0, y0: 50.0, y1: 60.0 };
        assert!(matches!(load_network(&n, &e, Some(empty)), Err(Error::Network(_))));
        // without the box, c is reachable and nothing is dropped
        assert_eq!(load_network(&n, &e, None).unwrap().directed_edges(), 4);
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = write(
            dir.path(),
            "id,x,y\na,0,0\nb,1,0\n",
            "id,from,to,length_m,road_class\ne1,a,b,10,main\ne2,a,b,10,highway\n",
        );
        match load_network(&n, &e, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a parse error, got {other:?}"),
        }
        let (n, e) = write(dir.path(), "id,x,y\na,zero,0\n", "id,from,to,length_m,road_class\n");
        assert!(matches!(load_network(&n, &e, None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn disconnected_networks_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = write(
            dir.path(),
            "id,x,y\na,0,0\nb,1,0\nc,2,0\n",
            "id,from,to,length_m,road_class\ne1,a,b,10,main\n",
        );
        assert!(matches!(load_network(&n, &e, None), Err(Error::Network(_))));
    }

    #[test]
    fn caps_and_capacities_are_validated() {
        let edge = |from, to| DirectedEdge {
            from,
            to,
            length_m: 10.0,
            t_free: 1.0,
            class: RoadClass::Main,
            source_id: "e".into(),
        };
        let net = RoadNetwork::new(vec!["a".into(), "b".into()], vec![(0.0, 0.0); 2], vec![edge(0, 1), edge(1, 0)]).unwrap();
        assert!(net.clone().with_caps(vec![0.5]).is_err());
        assert!(net.clone().with_caps(vec![0.5, 1.5]).is_err());
        assert!(net.clone().with_capacity(0.0, 1.0).is_err());
        assert_eq!(net.with_caps(vec![0.2, 0.3]).unwrap().caps, vec![0.2, 0.3]);
    }
}
