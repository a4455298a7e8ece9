//! Reference quadrature written without the engine or the corpus formulas.
//! Integrands are restated here from their mathematical definitions.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Midpoint grid sizes per axis.
pub const GRID_1D: usize = 1 << 12;
pub const GRID_2D: usize = 1 << 9;

/// Segments `[1/sqrt(j+1), 1/sqrt(j)]` summed before the tail is extrapolated.
pub const HK_SEGMENTS: usize = 4000;
/// Levels of repeated averaging over the alternating partial sums.
pub const HK_AVERAGING: usize = 24;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Composite Gauss-Legendre over `panels` equal panels of `[a, b]`.
pub fn gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, points: usize, panels: usize) -> f64 {
    let (xs, ws) = gauss_legendre_rule(points);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let m = a + (i as f64 + 0.5) * h;
            xs.iter().zip(&ws).map(|(x, w)| w * f(m + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Uniform midpoint rule with `n` cells on `[a, b]`, vector valued.
pub fn midpoint_1d(f: &dyn Fn(f64) -> Vec<f64>, a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    let mut acc: Vec<f64> = Vec::new();
    for i in 0..n {
        let v = f(a + (i as f64 + 0.5) * h);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (s, x) in acc.iter_mut().zip(v) {
            *s += x * h;
        }
    }
    acc
}

/// Uniform midpoint rule with `n x n` cells on `[x0,x1] x [y0,y1]`.
pub fn midpoint_2d(f: &dyn Fn(f64, f64) -> Vec<f64>, x: (f64, f64), y: (f64, f64), n: usize) -> Vec<f64> {
    let hx = (x.1 - x.0) / n as f64;
    let hy = (y.1 - y.0) / n as f64;
    let mut acc: Vec<f64> = Vec::new();
    for i in 0..n {
        let mut row: Vec<f64> = Vec::new();
        let s = x.0 + (i as f64 + 0.5) * hx;
        for j in 0..n {
            let v = f(s, y.0 + (j as f64 + 0.5) * hy);
            if row.is_empty() {
                row = vec![0.0; v.len()];
            }
            for (r, val) in row.iter_mut().zip(v) {
                *r += val;
            }
        }
        if acc.is_empty() {
            acc = vec![0.0; row.len()];
        }
        for (a, r) in acc.iter_mut().zip(row) {
            *a += r * hx * hy;
        }
    }
    acc
}

/// `d/dx [x^2 cos(pi/x^2)]`, continued by 0 at the origin.
pub fn hk_density(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let u = PI / (x * x);
    2.0 * x * u.cos() + 2.0 * PI / x * u.sin()
}

/// `∫_0^1 hk_density` on the grid `x_j = 1/sqrt(j)`, where the density changes
/// sign once per cell. Each cell gets an 8-point Gauss rule on 4 panels; the
/// alternating tail is removed by repeated averaging of the partial sums.
pub fn hk_oracle() -> f64 {
    let node = |j: usize| 1.0 / (j as f64).sqrt();
    let mut partial = Vec::with_capacity(HK_SEGMENTS);
    let mut s = 0.0;
    for j in 1..=HK_SEGMENTS {
        s += gauss(&hk_density, node(j + 1), node(j), 8, 4);
        partial.push(s);
    }
    let mut level: Vec<f64> = partial[partial.len() - HK_AVERAGING - 1..].to_vec();
    while level.len() > 1 {
        level = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    level[0]
}

/// One oracle value with a description of how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub id: String,
    pub method: String,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub entries: Vec<OracleEntry>,
}

impl OracleFixture {
    pub fn get(&self, id: &str) -> Option<&OracleEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

fn grid2(id: &str, f: &dyn Fn(f64, f64) -> Vec<f64>) -> OracleEntry {
    OracleEntry {
        id: id.into(),
        method: format!("midpoint {GRID_2D}x{GRID_2D}"),
        value: midpoint_2d(f, (0.0, 1.0), (0.0, 1.0), GRID_2D),
    }
}

fn rebased(id: &str, base: &OracleEntry) -> OracleEntry {
    OracleEntry { id: id.into(), method: format!("base {}: {}", base.id, base.method), value: base.value.clone() }
}

/// Oracle values for every corpus entry with a known integral. Entries that
/// differ from a base only on a null set reuse the base value, since a grid
/// cannot see the difference reliably.
pub fn compute_oracle() -> OracleFixture {
    let zero2d = grid2("zero2d", &|_, _| vec![0.0]);
    let line_smooth = grid2("line_smooth2d", &|x, y| vec![x.cos() * (1.0 + y)]);
    let zero1d = OracleEntry {
        id: "zero1d".into(),
        method: format!("midpoint {GRID_1D}"),
        value: midpoint_1d(&|_| vec![0.0], 0.0, 1.0, GRID_1D),
    };
    let hk = hk_oracle();
    let arctan_mass = gauss(&|y| 1.0 / (1.0 + y * y), 0.0, 1.0, 8, 16);
    let entries = vec![
        grid2("const2d", &|_, _| vec![1.5, -0.5]),
        grid2("poly_xy", &|x, y| vec![x * y]),
        grid2("sum_xy", &|x, y| vec![x + y]),
        grid2("gauss2d", &|x, y| vec![(-(x * x + y * y)).exp()]),
        grid2("vector2d", &|x, y| vec![x + y, x * y]),
        rebased("line_mass2d", &line_smooth),
        rebased("grid_null2d", &zero2d),
        rebased("dirichlet1d", &zero1d),
        OracleEntry {
            id: "hk1d_cos".into(),
            method: format!("gauss on cells 1/sqrt(j), j <= {HK_SEGMENTS}, {HK_AVERAGING} averaging levels"),
            value: vec![hk],
        },
        OracleEntry {
            id: "hk2d_product".into(),
            method: "hk1d_cos oracle times gauss 8x16 in y".into(),
            value: vec![hk * arctan_mass],
        },
        zero2d,
        line_smooth,
        zero1d,
    ];
    OracleFixture { entries }
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/oracle.json")
}

pub fn load_fixture() -> OracleFixture {
    let text = std::fs::read_to_string(fixture_path()).expect("oracle fixture present");
    serde_json::from_str(&text).expect("oracle fixture parses")
}

/// `max_i |a_i - b_i|`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
