use detforest::graph::{cover, electrical_transform, load_graph, Kind, Move, PeriodicGraph};
use detforest::kernel::{transfer_current, ContourInfo, StripKernel, TorusKernel};
use detforest::laplacian::{char_poly_strip, char_poly_torus, CharPolyOptions};
use detforest::laurent::{newton_polygon, LaurentPoly1, LaurentPoly2};
use detforest::limitshape::{build_tension_table, extract_leaves, leaves_svg, minimize_height, HeightField, MeshDoc};
use detforest::sampling::{dpp_sample, forest_svg, homology_class, mcmc_sample, rng_for, wilson_forest, ForestConfig};
use detforest::spectral::{
    correlation_class, growth_rate, harnack_check, ronkin, special_divisor_grid, strip_roots, surface_tension,
};
use detforest::{Error, C64};
use rand::Rng;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::output::{digest, fmt_f64, to_json};
use crate::{Cli, Command, GridArgs, KernelArgs, LimitArgs, Method, MoveKind, SampleArgs, TransformArgs};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Bad or unreadable input files and values.
    Input(String),
    /// A flag needed by this subcommand is missing.
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(s) => write!(f, "{s}"),
            CliError::Usage(s) => write!(f, "{s}\n\nFor more information, try '--help'."),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) | CliError::Input(_) => 2,
            CliError::Usage(_) => 64,
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

/// Files read and written during one invocation.
#[derive(Default)]
pub struct Run {
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Run {
    fn read(&mut self, path: &Path) -> Res<String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let d = digest(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), d);
        Ok(text)
    }

    fn write(&mut self, path: Option<&PathBuf>, text: &str) -> Res<()> {
        match path {
            Some(p) => {
                std::fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))?;
                self.outputs.push(p.display().to_string());
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn graph(cli: &Cli, run: &mut Run) -> Res<PeriodicGraph> {
    let path = cli.global.graph.as_ref().ok_or_else(|| CliError::Usage("--graph is required".into()))?;
    Ok(load_graph(&run.read(path)?)?)
}

fn poly_opts(cli: &Cli) -> CharPolyOptions {
    let mut o = CharPolyOptions::default();
    if let Some(t) = cli.global.tol {
        o.tol = t;
    }
    o
}

fn strip_poly(cli: &Cli, g: &PeriodicGraph) -> Res<LaurentPoly1> {
    Ok(char_poly_strip(g, poly_opts(cli))?)
}

fn torus_poly(cli: &Cli, g: &PeriodicGraph) -> Res<LaurentPoly2> {
    Ok(char_poly_torus(g, poly_opts(cli))?)
}

fn parse_f64(s: &str, what: &str) -> Res<f64> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::Input(format!("{what}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(CliError::Input(format!("{what}: {s} is not finite")));
    }
    Ok(v)
}

/// `a` or `lo:hi:n`.
pub fn parse_range(s: &str, what: &str) -> Res<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a] => Ok(vec![parse_f64(a, what)?]),
        [lo, hi, n] => {
            let (lo, hi) = (parse_f64(lo, what)?, parse_f64(hi, what)?);
            let n: usize = n.trim().parse().map_err(|_| CliError::Input(format!("{what}: bad count {n:?}")))?;
            match n {
                0 => Err(CliError::Input(format!("{what}: empty range"))),
                1 => Ok(vec![lo]),
                _ => Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(CliError::Input(format!("{what}: expected a number or lo:hi:n, got {s:?}"))),
    }
}

fn parse_pair_f64(s: &str, what: &str) -> Res<(f64, f64)> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [a, b] => Ok((parse_f64(a, what)?, parse_f64(b, what)?)),
        _ => Err(CliError::Input(format!("{what}: expected two comma-separated numbers, got {s:?}"))),
    }
}

fn parse_pair_i32(s: &str, what: &str) -> Res<(i32, i32)> {
    let p = |x: &str| x.trim().parse::<i32>().map_err(|_| CliError::Input(format!("{what}: bad integer {x:?}")));
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [a] => Ok((p(a)?, 0)),
        [a, b] => Ok((p(a)?, p(b)?)),
        _ => Err(CliError::Input(format!("{what}: expected `a` or `a,b`, got {s:?}"))),
    }
}

fn wants_csv(flag: bool, out: Option<&PathBuf>) -> bool {
    flag || out.is_some_and(|p| p.extension().is_some_and(|e| e == "csv"))
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Input(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

fn num(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        String::new()
    }
}

pub fn execute(cli: &Cli, run: &mut Run) -> Res<()> {
    let out = cli.global.out.as_ref();
    match &cli.cmd {
        Command::Charpoly => {
            let g = graph(cli, run)?;
            let doc = match g.kind() {
                Kind::Strip => strip_poly(cli, &g)?.to_doc(),
                Kind::Torus => torus_poly(cli, &g)?.to_doc(),
            };
            run.write(out, &to_json(&doc))
        }
        Command::Roots(a) => {
            let g = graph(cli, run)?;
            let report = strip_roots(&strip_poly(cli, &g)?, !g.is_massless())?;
            let text = if a.full {
                to_json(&json!({ "report": report, "roots_at_least_one": report.roots_at_least_one() }))
            } else {
                to_json(&report.roots_at_least_one())
            };
            run.write(out, &text)
        }
        Command::Growth(a) => {
            let g = graph(cli, run)?;
            let report = strip_roots(&strip_poly(cli, &g)?, !g.is_massless())?;
            let js: Vec<usize> = match a.j {
                Some(j) => vec![j],
                None => (if report.massive { 0 } else { 1 }..=report.m).collect(),
            };
            let rates = js
                .iter()
                .map(|&j| Ok(json!({ "j": j, "a": growth_rate(&report, j)? })))
                .collect::<Res<Vec<_>>>()?;
            run.write(out, &to_json(&json!({ "m": report.m, "massive": report.massive, "growth": rates })))
        }
        Command::Polygon => {
            let g = graph(cli, run)?;
            let poly = newton_polygon(&torus_poly(cli, &g)?)?;
            let halves: Vec<_> = poly.half_planes().iter().map(|(n, b)| json!({ "normal": [n.0, n.1], "offset": b })).collect();
            run.write(
                out,
                &to_json(&json!({
                    "vertices": poly.vertices,
                    "interior": poly.has_interior(),
                    "centrally_symmetric": poly.is_centrally_symmetric(),
                    "half_planes": halves,
                })),
            )
        }
        Command::Ronkin(a) => ronkin_cmd(cli, run, a),
        Command::Sigma(a) => sigma_cmd(cli, run, a),
        Command::Kernel(a) => kernel_cmd(cli, run, a),
        Command::Sample(a) => sample_cmd(cli, run, a),
        Command::Harnack(a) => {
            let g = graph(cli, run)?;
            let report = harnack_check(&torus_poly(cli, &g)?, a.r1, a.r2)?;
            run.write(out, &to_json(&report))
        }
        Command::Divisor(a) => {
            let pts = special_divisor_grid(a.n)?;
            run.write(out, &to_json(&json!({ "n": a.n, "count": pts.len(), "points": pts })))
        }
        Command::Decay(a) => {
            let g = graph(cli, run)?;
            let (s, t) = parse_pair_f64(&a.slope, "--slope")?;
            let fit = correlation_class(&torus_poly(cli, &g)?, s, t, a.max_dist)?;
            run.write(out, &to_json(&fit))
        }
        Command::Limitshape(a) => limitshape_cmd(cli, run, a),
        Command::Transform(a) => transform_cmd(cli, run, a),
    }
}

fn ronkin_cmd(cli: &Cli, run: &mut Run, a: &GridArgs) -> Res<()> {
    let g = graph(cli, run)?;
    let p = torus_poly(cli, &g)?;
    let (xs, ys) = (parse_range(&a.x, "--x")?, parse_range(&a.y, "--y")?);
    let mut pts = Vec::new();
    for &y in &ys {
        for &x in &xs {
            pts.push((x, y, ronkin(&p, x, y)?));
        }
    }
    let out = cli.global.out.as_ref();
    let text = if wants_csv(a.csv, out) {
        csv_text(&["x", "y", "R"], pts.iter().map(|&(x, y, r)| vec![num(x), num(y), num(r)]).collect())?
    } else if pts.len() == 1 {
        to_json(&json!({ "x": pts[0].0, "y": pts[0].1, "R": pts[0].2 }))
    } else {
        to_json(&pts.iter().map(|&(x, y, r)| json!({ "x": x, "y": y, "R": r })).collect::<Vec<_>>())
    };
    run.write(out, &text)
}

fn sigma_cmd(cli: &Cli, run: &mut Run, a: &GridArgs) -> Res<()> {
    let g = graph(cli, run)?;
    let p = torus_poly(cli, &g)?;
    let (ss, ts) = (parse_range(&a.x, "--x")?, parse_range(&a.y, "--y")?);
    let mut pts = Vec::new();
    for &t in &ts {
        for &s in &ss {
            pts.push(surface_tension(&p, s, t)?);
        }
    }
    let out = cli.global.out.as_ref();
    let text = if wants_csv(a.csv, out) {
        let rows = pts
            .iter()
            .map(|q| {
                vec![num(q.s), num(q.t), num(q.sigma), num(q.free_energy), num(q.x), num(q.y), q.boundary.to_string()]
            })
            .collect();
        csv_text(&["s", "t", "sigma", "free_energy", "x", "y", "boundary"], rows)?
    } else if pts.len() == 1 {
        to_json(&pts[0])
    } else {
        to_json(&pts)
    };
    run.write(out, &text)
}

#[derive(Serialize)]
struct EntryDoc {
    e1: usize,
    e2: usize,
    re: f64,
    im: f64,
}

fn kernel_cmd(cli: &Cli, run: &mut Run, a: &KernelArgs) -> Res<()> {
    let g = graph(cli, run)?;
    let edges: Vec<usize> = if a.edges.is_empty() { (0..g.num_edges()).collect() } else { a.edges.clone() };
    if let Some(&e) = edges.iter().find(|&&e| e >= g.num_edges()) {
        return Err(Error::OutOfRange(format!("edge {e} out of range")).into());
    }
    let pairs: Vec<(usize, usize)> = edges.iter().flat_map(|&x| edges.iter().map(move |&y| (x, y))).collect();
    let shift = parse_pair_i32(&a.shift, "--shift")?;
    let (vals, contour, residual): (Vec<C64>, ContourInfo, f64) = if let Some(st) = &a.slope {
        let (s, t) = parse_pair_f64(st, "--slope")?;
        let k = TorusKernel::new(&g, s, t)?;
        let req: Vec<_> = pairs.iter().map(|&(x, y)| (x, y, shift)).collect();
        let v = k.entries(&req)?;
        let res = v.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        (v, ContourInfo { kind: "torus".into(), radius_z: k.x.exp(), radius_w: k.y.exp() }, res)
    } else if let Some(j) = a.component {
        if shift.1 != 0 {
            return Err(CliError::Input("strip kernels take a single shift".into()));
        }
        let k = StripKernel::new(&g, j, a.radius)?;
        let req: Vec<_> = pairs.iter().map(|&(x, y)| (x, y, shift.0)).collect();
        let v = k.entries(&req)?;
        let res = v.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        (v, ContourInfo { kind: "strip".into(), radius_z: k.radius, radius_w: 1.0 }, res)
    } else {
        if shift != (0, 0) {
            return Err(CliError::Input("--shift needs --slope or --component".into()));
        }
        let k = transfer_current(&g, C64::new(a.z, 0.0), C64::new(a.w, 0.0))?;
        let v = pairs.iter().map(|&(x, y)| k.entries[(x, y)]).collect();
        (v, ContourInfo { kind: "finite".into(), radius_z: a.z.abs(), radius_w: a.w.abs() }, k.projection_defect())
    };
    let entries: Vec<EntryDoc> =
        pairs.iter().zip(&vals).map(|(&(e1, e2), v)| EntryDoc { e1, e2, re: v.re, im: v.im }).collect();
    run.write(
        cli.global.out.as_ref(),
        &to_json(&json!({ "entries": entries, "shift": [shift.0, shift.1], "contour": contour, "residual": residual })),
    )
}

/// A root for every tree component of a DPP sample, drawn proportionally to mass.
fn choose_roots<R: Rng>(g: &PeriodicGraph, edges: &[usize], rng: &mut R) -> Vec<usize> {
    let n = g.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &e in edges {
        let ed = &g.edges()[e];
        let (a, b) = (find(&mut parent, ed.u), find(&mut parent, ed.v));
        parent[a] = b;
    }
    let mut comps: BTreeMap<usize, (Vec<usize>, usize)> = BTreeMap::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        comps.entry(r).or_default().0.push(v);
    }
    for &e in edges {
        let r = find(&mut parent, g.edges()[e].u);
        comps.get_mut(&r).unwrap().1 += 1;
    }
    let mut roots = Vec::new();
    for (verts, ne) in comps.values() {
        if *ne + 1 != verts.len() {
            continue;
        }
        let total: f64 = verts.iter().map(|&v| g.mass()[v]).sum();
        if total <= 0.0 {
            continue;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = *verts.last().unwrap();
        for &v in verts {
            u -= g.mass()[v];
            if u < 0.0 {
                pick = v;
                break;
            }
        }
        roots.push(pick);
    }
    roots
}

fn sample_cmd(cli: &Cli, run: &mut Run, a: &SampleArgs) -> Res<()> {
    let g = graph(cli, run)?;
    let n2 = match g.kind() {
        Kind::Strip => 1,
        Kind::Torus => a.n2.unwrap_or(a.n),
    };
    let cv = cover(&g, a.n, n2)?;
    let cg = &cv.graph;
    let seed = cli.global.seed;
    let config = match a.method {
        Method::Dpp => {
            let k = transfer_current(cg, C64::new(a.z, 0.0), C64::new(a.w, 0.0))?;
            let mut rng = rng_for(seed, 0);
            let edges = dpp_sample(&k, &mut rng)?;
            let roots = choose_roots(cg, &edges, &mut rng);
            ForestConfig::new(cg, edges, roots)?
        }
        Method::Wilson => {
            let root = match &a.root {
                Some(name) => Some(
                    cg.vertex_index(name)
                        .ok_or_else(|| CliError::Input(format!("no vertex named {name:?} in the cover")))?,
                ),
                None => None,
            };
            wilson_forest(cg, root, &mut rng_for(seed, 0))?
        }
        Method::Mcmc => mcmc_sample(cg, parse_pair_i32(&a.homology, "--homology")?, a.steps, seed)?,
    };
    let out = cli.global.out.as_ref();
    let text = if out.is_some_and(|p| p.extension().is_some_and(|e| e == "svg")) {
        forest_svg(cg, &config)
    } else {
        let h = homology_class(&config)?;
        to_json(&json!({
            "method": a.method,
            "cover": [a.n, n2],
            "seed": seed,
            "vertices": cg.names(),
            "homology": [h.0, h.1],
            "cycles": config.num_cycles(),
            "config": config,
        }))
    };
    run.write(out, &text)
}

fn limitshape_cmd(cli: &Cli, run: &mut Run, a: &LimitArgs) -> Res<()> {
    let g = graph(cli, run)?;
    let p = torus_poly(cli, &g)?;
    let mut field = match &a.mesh {
        Some(path) => {
            let doc: MeshDoc = serde_json::from_str(&run.read(path)?)
                .map_err(|e| CliError::Input(format!("malformed mesh {}: {e}", path.display())))?;
            HeightField::from_doc(&doc)?
        }
        None => HeightField::rectangle(a.cells, a.cells, (0.0, 0.0), (1.0, 1.0))?,
    };
    let text = run.read(&a.boundary)?;
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let n = field.vertices.len();
    let mut given = vec![false; n];
    for rec in rd.deserialize::<(usize, f64)>() {
        let (v, h) = rec.map_err(|e| CliError::Input(format!("boundary csv: {e}")))?;
        if v >= n {
            return Err(CliError::Input(format!("boundary csv: vertex {v} out of range")));
        }
        if !h.is_finite() {
            return Err(CliError::Input(format!("boundary csv: height of vertex {v} is not finite")));
        }
        field.heights[v] = h;
        field.fixed[v] = true;
        given[v] = true;
    }
    if let Some(v) = (0..n).find(|&v| field.fixed[v] && !given[v]) {
        return Err(CliError::Input(format!("boundary csv: no height for fixed vertex {v}")));
    }
    for v in 0..n {
        if !field.fixed[v] {
            field.heights[v] = f64::NAN;
        }
    }
    let table = build_tension_table(&p, a.resolution)?;
    let tol = cli.global.tol.unwrap_or(1e-8);
    let shape = minimize_height(&field, &table, tol)?;
    let leaves = extract_leaves(&shape.height, a.spacing)?;
    if let Some(o) = cli.global.out.as_ref() {
        run.write(Some(o), &leaves_svg(&shape.height, &leaves))?;
    }
    let violations: Vec<_> = table.violations.iter().map(|v| json!({ "s": v.s, "t": v.t, "excess": v.excess })).collect();
    let report = json!({
        "energy": shape.energy,
        "energy_pl": shape.energy_pl,
        "residual": shape.residual,
        "sweeps": shape.sweeps,
        "tol": tol,
        "table": { "resolution": table.resolution, "epsilon": table.epsilon, "violations": violations },
        "leaves": leaves.len(),
        "heights": shape.height.heights,
    });
    run.write(a.report.as_ref(), &to_json(&report))
}

fn transform_cmd(cli: &Cli, run: &mut Run, a: &TransformArgs) -> Res<()> {
    let g = graph(cli, run)?;
    let vertex = || -> Res<usize> {
        let name = a.vertex.as_ref().ok_or_else(|| CliError::Usage("--vertex is required for this move".into()))?;
        g.vertex_index(name).ok_or_else(|| CliError::Input(format!("no vertex named {name:?}")))
    };
    let mv = match a.kind {
        MoveKind::Series => Move::Series { vertex: vertex()? },
        MoveKind::DeadBranch => Move::DeadBranch { vertex: vertex()? },
        MoveKind::StarTriangle => Move::StarTriangle { vertex: vertex()? },
        MoveKind::Parallel => match a.edges.as_slice() {
            [e1, e2] => Move::Parallel { e1: *e1, e2: *e2 },
            _ => return Err(CliError::Usage("--edges must name exactly two edges for a parallel move".into())),
        },
    };
    let h = electrical_transform(&g, mv)?;
    run.write(cli.global.out.as_ref(), &to_json(&h.to_doc()))
}
