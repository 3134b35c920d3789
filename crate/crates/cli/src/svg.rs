//! Minimal SVG sketch of a shortest-segment solution: the two curves
//! sampled over their domains and the connecting segment.

use std::path::Path;

use jetflag::variational::{ColumbusSolution, CurveSpec};

const SAMPLES: usize = 256;

fn polyline(curve: &CurveSpec) -> Result<Vec<[f64; 2]>, String> {
    let (a, b) = curve.domain;
    (0..=SAMPLES)
        .map(|i| {
            let s = a + (b - a) * i as f64 / SAMPLES as f64;
            curve.point(s).map_err(|e| e.to_string())
        })
        .collect()
}

pub fn write_columbus(
    path: &Path,
    g1: &CurveSpec,
    g2: &CurveSpec,
    sol: &ColumbusSolution<f64>,
) -> Result<(), String> {
    let c1 = polyline(g1)?;
    let c2 = polyline(g2)?;
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in c1.iter().chain(&c2).chain([&sol.p1, &sol.p2]) {
        for d in 0..2 {
            min[d] = min[d].min(p[d]);
            max[d] = max[d].max(p[d]);
        }
    }
    let pad = 0.05 * ((max[0] - min[0]).max(max[1] - min[1]).max(1.0));
    let view = format!(
        "{} {} {} {}",
        min[0] - pad,
        -(max[1] + pad),
        max[0] - min[0] + 2.0 * pad,
        max[1] - min[1] + 2.0 * pad
    );
    let stroke = (max[0] - min[0]).max(max[1] - min[1]).max(1.0) / 200.0;
    let points = |poly: &[[f64; 2]]| {
        poly.iter()
            .map(|p| format!("{:.6},{:.6}", p[0], -p[1]))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let svg = format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{view}\">\n",
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"{w}\" points=\"{c1}\"/>\n",
            "<polyline fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"{w}\" points=\"{c2}\"/>\n",
            "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"#d62728\" stroke-width=\"{w}\"/>\n",
            "<circle cx=\"{x1}\" cy=\"{y1}\" r=\"{r}\" fill=\"#d62728\"/>\n",
            "<circle cx=\"{x2}\" cy=\"{y2}\" r=\"{r}\" fill=\"#d62728\"/>\n",
            "</svg>\n"
        ),
        view = view,
        w = stroke,
        c1 = points(&c1),
        c2 = points(&c2),
        x1 = sol.p1[0],
        y1 = -sol.p1[1],
        x2 = sol.p2[0],
        y2 = -sol.p2[1],
        r = 2.0 * stroke,
    );
    std::fs::write(path, svg).map_err(|e| format!("writing {}: {e}", path.display()))
}
