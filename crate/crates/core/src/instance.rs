//! Problem instances, Euclidean costs, random generators and the JSON
//! instance format.
//!
//! Node 0 is always the start node (TSP, TSPTW) or the depot (VRP).

use std::fmt;
use std::fs;
use std::ops::Index;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the start node / depot in every instance.
pub const DEPOT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Tsp,
    Vrp,
    Tsptw,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Tsp => "tsp",
            ProblemKind::Vrp => "vrp",
            ProblemKind::Tsptw => "tsptw",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsp" => Ok(ProblemKind::Tsp),
            "vrp" | "cvrp" => Ok(ProblemKind::Vrp),
            "tsptw" => Ok(ProblemKind::Tsptw),
            other => Err(Error::InvalidArgument(format!(
                "unknown problem '{other}' (expected tsp, vrp or tsptw)"
            ))),
        }
    }
}

/// A time window `[earliest, latest]`; arrival after `latest` is infeasible,
/// arrival before `earliest` waits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub earliest: f64,
    pub latest: f64,
}

impl TimeWindow {
    pub const OPEN: TimeWindow = TimeWindow {
        earliest: 0.0,
        latest: f64::INFINITY,
    };

    pub fn new(earliest: f64, latest: f64) -> Self {
        TimeWindow { earliest, latest }
    }

    pub fn width(&self) -> f64 {
        self.latest - self.earliest
    }
}

/// An immutable, validated problem definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    kind: ProblemKind,
    coords: Vec<[f64; 2]>,
    demands: Vec<f64>,
    capacity: f64,
    windows: Vec<TimeWindow>,
}

impl Instance {
    pub fn tsp(coords: Vec<[f64; 2]>) -> Result<Self> {
        let inst = Instance {
            kind: ProblemKind::Tsp,
            coords,
            demands: Vec::new(),
            capacity: 0.0,
            windows: Vec::new(),
        };
        inst.validate()?;
        Ok(inst)
    }

    /// `demands[0]` is the depot and must be 0.
    pub fn vrp(coords: Vec<[f64; 2]>, demands: Vec<f64>, capacity: f64) -> Result<Self> {
        let inst = Instance {
            kind: ProblemKind::Vrp,
            coords,
            demands,
            capacity,
            windows: Vec::new(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn tsptw(coords: Vec<[f64; 2]>, windows: Vec<TimeWindow>) -> Result<Self> {
        let inst = Instance {
            kind: ProblemKind::Tsptw,
            coords,
            demands: Vec::new(),
            capacity: 0.0,
            windows,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let n = self.coords.len();
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if n < 2 {
            return bad(format!("need at least 2 nodes, got {n}"));
        }
        if let Some(i) = self
            .coords
            .iter()
            .position(|c| !c[0].is_finite() || !c[1].is_finite())
        {
            return bad(format!("coordinate {i} is not finite"));
        }
        match self.kind {
            ProblemKind::Tsp => {}
            ProblemKind::Vrp => {
                if self.demands.len() != n {
                    return bad(format!(
                        "demands has length {}, expected {n}",
                        self.demands.len()
                    ));
                }
                if !(self.capacity.is_finite() && self.capacity > 0.0) {
                    return bad(format!("capacity must be positive, got {}", self.capacity));
                }
                if self.demands[DEPOT] != 0.0 {
                    return bad(format!("depot demand must be 0, got {}", self.demands[DEPOT]));
                }
                for (i, &d) in self.demands.iter().enumerate().skip(1) {
                    if !(d > 0.0 && d <= self.capacity) {
                        return bad(format!(
                            "demand of node {i} is {d}, must be in (0, {}]",
                            self.capacity
                        ));
                    }
                }
            }
            ProblemKind::Tsptw => {
                if self.windows.len() != n {
                    return bad(format!(
                        "time_windows has length {}, expected {n}",
                        self.windows.len()
                    ));
                }
                for (i, w) in self.windows.iter().enumerate() {
                    if w.earliest.is_nan() || w.latest.is_nan() || w.earliest > w.latest {
                        return bad(format!(
                            "time window of node {i} is [{}, {}]",
                            w.earliest, w.latest
                        ));
                    }
                    if w.earliest < 0.0 {
                        return bad(format!("time window of node {i} opens before 0"));
                    }
                }
                if self.windows[DEPOT].earliest != 0.0 {
                    return bad("depot time window must open at 0".into());
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Empty unless this is a VRP instance.
    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Empty unless this is a TSPTW instance.
    pub fn windows(&self) -> &[TimeWindow] {
        &self.windows
    }

    pub fn costs(&self) -> CostMatrix {
        euclidean_cost_matrix(&self.coords)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<json>".into(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        file.into_instance()
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile::from(self);
        let mut s = serde_json::to_string(&file).expect("instance serializes");
        s.push('\n');
        s
    }
}

/// On-disk layout. An infinite window end is written as `null`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    problem: ProblemKind,
    coords: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demands: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_windows: Option<Vec<(f64, Option<f64>)>>,
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        let missing = |field: &str| {
            Error::InvalidInstance(format!(
                "problem '{}' requires field '{field}'",
                self.problem
            ))
        };
        match self.problem {
            ProblemKind::Tsp => Instance::tsp(self.coords),
            ProblemKind::Vrp => {
                let demands = self.demands.clone().ok_or_else(|| missing("demands"))?;
                let capacity = self.capacity.ok_or_else(|| missing("capacity"))?;
                Instance::vrp(self.coords, demands, capacity)
            }
            ProblemKind::Tsptw => {
                let windows = match &self.time_windows {
                    Some(tw) => tw
                        .iter()
                        .map(|&(l, u)| TimeWindow::new(l, u.unwrap_or(f64::INFINITY)))
                        .collect(),
                    None => return Err(missing("time_windows")),
                };
                Instance::tsptw(self.coords, windows)
            }
        }
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            problem: inst.kind,
            coords: inst.coords.clone(),
            demands: (inst.kind == ProblemKind::Vrp).then(|| inst.demands.clone()),
            capacity: (inst.kind == ProblemKind::Vrp).then_some(inst.capacity),
            time_windows: (inst.kind == ProblemKind::Tsptw).then(|| {
                inst.windows
                    .iter()
                    .map(|w| (w.earliest, w.latest.is_finite().then_some(w.latest)))
                    .collect()
            }),
        }
    }
}

/// Dense row-major `n x n` matrix of travel costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        CostMatrix { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

impl Index<(usize, usize)> for CostMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n + j]
    }
}

pub fn euclidean_cost_matrix(coords: &[[f64; 2]]) -> CostMatrix {
    CostMatrix::from_fn(coords.len(), |i, j| {
        if i == j {
            0.0
        } else {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            dx.hypot(dy)
        }
    })
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    Ok(())
}

fn uniform_coords(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.gen::<f64>() * scale, rng.gen::<f64>() * scale])
        .collect()
}

/// `n` nodes uniform on the unit square.
pub fn generate_tsp(n: usize, seed: u64) -> Result<Instance> {
    check_size(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance::tsp(uniform_coords(&mut rng, n, 1.0))
}

/// Vehicle capacity for `customers` customers: 20/30/40/50 at 10/20/50/100,
/// linearly interpolated and rounded in between, clamped outside.
pub fn vrp_capacity(customers: usize) -> f64 {
    const TABLE: [(f64, f64); 4] = [(10.0, 20.0), (20.0, 30.0), (50.0, 40.0), (100.0, 50.0)];
    let n = customers as f64;
    if n <= TABLE[0].0 {
        return TABLE[0].1;
    }
    for pair in TABLE.windows(2) {
        let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
        if n <= x1 {
            return (y0 + (y1 - y0) * (n - x0) / (x1 - x0)).round();
        }
    }
    TABLE[3].1
}

/// `customers` customers plus the depot (node 0), all uniform on the unit
/// square, with integer demands uniform in 1..=9.
pub fn generate_vrp(customers: usize, seed: u64) -> Result<Instance> {
    check_size(customers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = uniform_coords(&mut rng, customers + 1, 1.0);
    let demands = std::iter::once(0.0)
        .chain((0..customers).map(|_| rng.gen_range(1..=9) as f64))
        .collect();
    Instance::vrp(coords, demands, vrp_capacity(customers))
}

/// `n` nodes (depot included) uniform on `[0, 100]^2`. Windows are sampled
/// around the arrival times of a random visiting order without waiting, so
/// that order is always feasible.
pub fn generate_tsptw(n: usize, seed: u64, max_window: f64) -> Result<Instance> {
    check_size(n)?;
    if !(max_window > 0.0 && max_window.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "max_window must be positive, got {max_window}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = uniform_coords(&mut rng, n, 100.0);
    let costs = euclidean_cost_matrix(&coords);

    let mut order: Vec<usize> = (1..n).collect();
    order.shuffle(&mut rng);

    let mut windows = vec![TimeWindow::OPEN; n];
    let (mut prev, mut arrival) = (DEPOT, 0.0);
    let half = max_window / 2.0;
    for &node in &order {
        arrival += costs[(prev, node)];
        let below = rng.gen::<f64>() * half;
        let above = rng.gen::<f64>() * half;
        windows[node] = TimeWindow::new((arrival - below).max(0.0), arrival + above);
        prev = node;
    }
    Instance::tsptw(coords, windows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_costs() {
        let c = euclidean_cost_matrix(&[[0.0, 0.0], [3.0, 4.0]]);
        assert_eq!(c[(0, 1)], 5.0);
        assert_eq!(c[(1, 0)], 5.0);
        assert_eq!(c[(0, 0)], 0.0);

        let c = euclidean_cost_matrix(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((c[(1, 2)] - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((0..3).all(|i| c[(i, i)] == 0.0));
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let inst = generate_tsp(60, 11).unwrap();
        let c = inst.costs();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (i, j, k) = (rng.gen_range(0..60), rng.gen_range(0..60), rng.gen_range(0..60));
            assert!(c[(i, k)] <= c[(i, j)] + c[(j, k)] + 1e-9);
            assert_eq!(c[(i, j)], c[(j, i)]);
        }
    }

    #[test]
    fn tsp_generator() {
        let inst = generate_tsp(100, 0).unwrap();
        assert_eq!(inst.len(), 100);
        assert!(inst
            .coords()
            .iter()
            .all(|c| (0.0..=1.0).contains(&c[0]) && (0.0..=1.0).contains(&c[1])));
        assert_eq!(generate_tsp(5, 7).unwrap(), generate_tsp(5, 7).unwrap());
        assert_ne!(generate_tsp(5, 7).unwrap(), generate_tsp(5, 8).unwrap());
        assert!(generate_tsp(1, 0).is_err());
    }

    #[test]
    fn vrp_generator_and_capacity_table() {
        let inst = generate_vrp(100, 0).unwrap();
        assert_eq!(inst.capacity(), 50.0);
        assert_eq!(inst.len(), 101);
        assert_eq!(inst.demands()[0], 0.0);
        assert!(inst.demands()[1..]
            .iter()
            .all(|&d| (1.0..=9.0).contains(&d) && d.fract() == 0.0));
        assert_eq!(generate_vrp(20, 3).unwrap().capacity(), 30.0);
        assert_eq!(vrp_capacity(10), 20.0);
        assert_eq!(vrp_capacity(50), 40.0);
        assert_eq!(vrp_capacity(35), 35.0);
        assert_eq!(vrp_capacity(75), 45.0);
        assert_eq!(vrp_capacity(4), 20.0);
        assert_eq!(vrp_capacity(500), 50.0);
    }

    #[test]
    fn tsptw_windows_contain_generating_schedule() {
        for seed in 0..20 {
            let inst = generate_tsptw(20, seed, 1000.0).unwrap();
            assert_eq!(inst.windows()[0], TimeWindow::OPEN);
            for w in &inst.windows()[1..] {
                assert!(w.earliest >= 0.0 && w.earliest <= w.latest);
                assert!(w.width() <= 1000.0);
            }
            assert!(inst.coords().iter().all(|c| c[0] <= 100.0 && c[1] <= 100.0));
        }
    }

    #[test]
    fn smaller_max_window_gives_narrower_windows() {
        let mean_width = |max_window: f64| {
            let mut total = 0.0;
            let mut count = 0;
            for seed in 0..100 {
                let inst = generate_tsptw(20, seed, max_window).unwrap();
                for w in &inst.windows()[1..] {
                    total += w.width();
                    count += 1;
                }
            }
            total / count as f64
        };
        assert!(mean_width(100.0) < mean_width(1000.0));
    }

    #[test]
    fn json_round_trip() {
        for inst in [
            generate_tsp(30, 1).unwrap(),
            generate_vrp(100, 2).unwrap(),
            generate_tsptw(15, 3, 500.0).unwrap(),
        ] {
            let back = Instance::from_json(&inst.to_json()).unwrap();
            assert_eq!(back, inst);
        }
    }

    #[test]
    fn json_validation_errors() {
        let err = Instance::from_json(r#"{"problem":"vrp","coords":[[0,0],[1,1]],"demands":[0,1]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("capacity"), "{err}");

        let err = Instance::from_json(
            r#"{"problem":"tsptw","coords":[[0,0],[1,1]],"time_windows":[[0,null],[5,3]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInstance(_)), "{err}");

        let err = Instance::from_json("{\n\"problem\": \"tsp\",\n\"coords\": [[0, 0], [1]]\n}")
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }

        let err = Instance::from_json(r#"{"problem":"tsp","coords":[[0,0],[1,1],[2,2]],"demands":[0,1]}"#);
        assert!(err.is_ok(), "extra VRP fields on a TSP file are ignored");
    }
}
