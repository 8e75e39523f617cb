use std::path::Path;

use serde::Serialize;
use sgt_core::compare::Choice;
use sgt_core::spectral::{filtration_dim, CONVERGENCE_ABSCISSA};
use sgt_core::*;
use std::result::Result;

use crate::output::{emit, key_text, num, Report};
use crate::{Command, Failure, Method, OutputArgs, RunConfig, SGrid, Status};

const MAX_GRID_POINTS: usize = 1_000_000;

pub fn run(command: Command) -> Result<Status, Failure> {
    match command {
        Command::Validate { graph, output } => {
            let config = config("validate", &[&graph], &output);
            cmd_validate(&graph, &config)
        }
        Command::Invariants {
            graph,
            depth,
            origin,
            output,
        } => {
            let config = RunConfig {
                depth: Some(depth),
                origin: origin.clone(),
                ..config("invariants", &[&graph], &output)
            };
            cmd_invariants(&graph, depth, origin.as_deref(), &config)
        }
        Command::Measure {
            graph,
            depth,
            method,
            origin,
            choice,
            budget,
            output,
        } => {
            let config = RunConfig {
                depth: Some(depth),
                methods: method.clone(),
                origin: origin.clone(),
                choice: vec![choice],
                budget: Some(budget),
                ..config("measure", &[&graph], &output)
            };
            cmd_measure(
                &graph,
                depth,
                &method,
                origin.as_deref(),
                choice,
                budget,
                &config,
            )
        }
        Command::Zeta {
            graph,
            symbol,
            depth,
            s_start,
            s_stop,
            s_step,
            method,
            choice,
            budget,
            output,
        } => {
            let grid = SGrid {
                start: s_start,
                stop: s_stop,
                step: s_step,
            };
            let config = RunConfig {
                depth: Some(depth),
                s_grid: Some(grid),
                methods: vec![method],
                symbol: Some(symbol.clone()),
                choice: vec![choice],
                budget: Some(budget),
                ..config("zeta", &[&graph], &output)
            };
            cmd_zeta(
                &graph, &symbol, depth, grid, method, choice, budget, &config,
            )
        }
        Command::Compare {
            first,
            second,
            depth,
            tol,
            budget,
            output,
        } => {
            let config = RunConfig {
                depth: Some(depth),
                tol: Some(tol),
                budget: Some(budget),
                ..config("compare", &[&first, &second], &output)
            };
            cmd_compare(&first, &second, depth, tol, budget, &config)
        }
        Command::Reconstruct {
            first,
            second,
            radius,
            choice,
            budget,
            output,
        } => {
            let config = RunConfig {
                radius: Some(radius),
                choice: choice.clone(),
                budget: Some(budget),
                ..config("reconstruct", &[&first, &second], &output)
            };
            cmd_reconstruct(&first, &second, radius, &choice, budget, &config)
        }
    }
}

fn config(command: &'static str, inputs: &[&Path], output: &OutputArgs) -> RunConfig {
    RunConfig {
        command,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        format: Some(output.format),
        out: output.out.as_ref().map(|p| p.display().to_string()),
        ..RunConfig::default()
    }
}

fn read_graph(path: &Path) -> Result<MultiGraph, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    MultiGraph::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn require_depth(depth: usize) -> Result<(), Failure> {
    if depth == 0 {
        return Err(Failure::Input("--depth must be at least 1".into()));
    }
    Ok(())
}

fn resolve_origin(graph: &MultiGraph, origin: Option<&str>) -> Result<VertexId, Failure> {
    match origin {
        None => Ok(VertexId(0)),
        Some(name) => graph
            .vertex_by_name(name)
            .ok_or_else(|| Error::UnknownOrigin(name.to_string()).into()),
    }
}

fn resolve_choice(graph: &MultiGraph, index: usize, budget: usize) -> Result<Choice, Failure> {
    let enumeration = compare::enumerate_choices(graph, budget)?;
    let available = enumeration.choices.len();
    enumeration
        .choices
        .into_iter()
        .nth(index)
        .ok_or_else(|| Error::ChoiceOutOfRange { index, available }.into())
}

fn tree_method(method: Method) -> Option<TreeMethod> {
    match method {
        Method::Poincare => Some(TreeMethod::Poincare),
        Method::Perron => Some(TreeMethod::Perron),
        _ => None,
    }
}

fn boundary_method(method: Method) -> Option<BoundaryMethod> {
    match method {
        Method::RestrictedPoincare => Some(BoundaryMethod::RestrictedPoincare),
        Method::GeodesicClassify => Some(BoundaryMethod::GeodesicClassify),
        _ => None,
    }
}

fn path_text(graph: &MultiGraph, path: &TreePath) -> String {
    let darts: Vec<i64> = path.darts.iter().map(|d| d.0 as i64).collect();
    format!("{}:{}", graph.name(path.start), key_text(&darts))
}

#[derive(Serialize)]
struct ValidateResult {
    passed: bool,
    genus: Option<usize>,
    violations: Vec<graph::Violation>,
    messages: Vec<String>,
}

fn cmd_validate(path: &Path, config: &RunConfig) -> Result<Status, Failure> {
    let graph = read_graph(path)?;
    let report = validate(&graph);
    let messages: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    for m in &messages {
        eprintln!("{}: {m}", path.display());
    }
    let rows = messages.iter().map(|m| vec![m.clone()]).collect();
    let result = ValidateResult {
        passed: report.passed(),
        genus: report.genus,
        violations: report.violations,
        messages,
    };
    let status = if result.passed {
        Status::Success
    } else {
        Status::Hypothesis
    };
    emit(
        config,
        &Report {
            result,
            header: vec!["violation"],
            rows,
        },
    )?;
    Ok(status)
}

#[derive(Serialize)]
struct InvariantsResult {
    g: usize,
    delta: f64,
    perron_value: f64,
    edge_length: f64,
    origin: String,
    sphere_sizes: Vec<u128>,
    dims: Vec<u128>,
    lambdas: Vec<f64>,
}

fn cmd_invariants(
    path: &Path,
    depth: usize,
    origin: Option<&str>,
    config: &RunConfig,
) -> Result<Status, Failure> {
    require_depth(depth)?;
    let graph = read_graph(path)?;
    validate(&graph).into_result()?;
    let o = resolve_origin(&graph, origin)?;
    let g = betti(&graph)?;
    let result = InvariantsResult {
        g,
        delta: critical_exponent(&graph)?,
        perron_value: covering::perron_value(&graph)?,
        edge_length: graph.edge_length(),
        origin: graph.name(o).to_string(),
        sphere_sizes: sphere_sizes(&graph, o, depth),
        dims: (0..=depth).map(|n| filtration_dim(g, n)).collect(),
        lambdas: (0..=depth).map(|n| dirac_eigenvalue(g, n)).collect(),
    };
    let rows = (0..=depth)
        .map(|n| {
            vec![
                n.to_string(),
                result.sphere_sizes[n].to_string(),
                result.dims[n].to_string(),
                num(result.lambdas[n]),
                g.to_string(),
                num(result.delta),
            ]
        })
        .collect();
    emit(
        config,
        &Report {
            result,
            header: vec!["n", "sphere_size", "dim", "lambda", "g", "delta"],
            rows,
        },
    )?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct MeasureResult {
    origin: String,
    choice: ChoiceId,
    tree_method: TreeMethod,
    boundary_method: BoundaryMethod,
    tree: CylinderMeasure,
    freegroup: CylinderMeasure,
}

fn cmd_measure(
    path: &Path,
    depth: usize,
    methods: &[Method],
    origin: Option<&str>,
    choice: usize,
    budget: usize,
    config: &RunConfig,
) -> Result<Status, Failure> {
    require_depth(depth)?;
    let trees: Vec<TreeMethod> = methods.iter().filter_map(|&m| tree_method(m)).collect();
    let boundaries: Vec<BoundaryMethod> =
        methods.iter().filter_map(|&m| boundary_method(m)).collect();
    if trees.len() > 1 || boundaries.len() > 1 {
        return Err(Failure::Input(
            "give at most one tree method and one boundary method".into(),
        ));
    }
    let tm = trees.first().copied().unwrap_or(TreeMethod::Perron);
    let bm = boundaries
        .first()
        .copied()
        .unwrap_or(BoundaryMethod::GeodesicClassify);
    let graph = read_graph(path)?;
    validate(&graph).into_result()?;
    let o = resolve_origin(&graph, origin)?;
    let chosen = resolve_choice(&graph, choice, budget)?;
    let presentation = chosen.presentation(&graph)?;
    let (tree, nu) = rayon::join(
        || ps_measure_tree(&graph, o, depth, tm),
        || pullback_measure(&presentation, depth, bm),
    );
    let result = MeasureResult {
        origin: graph.name(o).to_string(),
        choice: chosen.id,
        tree_method: tm,
        boundary_method: bm,
        tree: tree?,
        freegroup: nu?.0,
    };
    let mut rows = Vec::new();
    for (side, m) in [("tree", &result.tree), ("freegroup", &result.freegroup)] {
        for (key, mass) in &m.masses {
            rows.push(vec![
                side.to_string(),
                key.len().to_string(),
                key_text(key),
                num(*mass),
            ]);
        }
    }
    emit(
        config,
        &Report {
            result,
            header: vec!["side", "length", "key", "mass"],
            rows,
        },
    )?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct ZetaRow {
    s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<f64>,
    status: &'static str,
}

#[derive(Serialize)]
struct ZetaResult {
    g: usize,
    symbol: String,
    #[serde(rename = "N")]
    depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    choice: Option<ChoiceId>,
    rows: Vec<ZetaRow>,
}

fn grid_points(grid: SGrid) -> Result<Vec<f64>, Failure> {
    if !(grid.step > 0.0 && grid.start.is_finite() && grid.stop.is_finite()) {
        return Err(Failure::Input(
            "s-grid needs finite bounds and a positive step".into(),
        ));
    }
    if grid.stop < grid.start {
        return Err(Failure::Input("--s-stop is below --s-start".into()));
    }
    let count = ((grid.stop - grid.start) / grid.step + 1e-9).floor() as usize + 1;
    if count > MAX_GRID_POINTS {
        return Err(Failure::Input(format!(
            "s-grid has more than {MAX_GRID_POINTS} points"
        )));
    }
    // rounding keeps printed grid values short and reproducible
    Ok((0..count)
        .map(|k| ((grid.start + k as f64 * grid.step) * 1e12).round() / 1e12)
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_zeta(
    path: &Path,
    symbol_text: &str,
    depth: usize,
    grid: SGrid,
    method: Method,
    choice: usize,
    budget: usize,
    config: &RunConfig,
) -> Result<Status, Failure> {
    require_depth(depth)?;
    let bm = boundary_method(method).ok_or_else(|| {
        Failure::Input("zeta takes restricted-poincare or geodesic-classify".into())
    })?;
    let points = grid_points(grid)?;
    let symbol: Symbol = symbol_text.parse()?;
    let graph = read_graph(path)?;
    validate(&graph).into_result()?;
    let g = betti(&graph)?;
    if symbol.genus_needed() > g {
        return Err(Failure::Input(format!(
            "symbol uses generator {} but the graph has genus {g}",
            symbol.genus_needed()
        )));
    }
    if symbol.depth() > depth {
        return Err(Failure::Input(format!(
            "--depth {depth} is below the symbol depth {}",
            symbol.depth()
        )));
    }
    let is_one = symbol == Symbol::one();
    let (series, chosen) = if is_one {
        (ZetaSeries::one(g, depth), None)
    } else {
        let chosen = resolve_choice(&graph, choice, budget)?;
        let nu = pullback_measure(&chosen.presentation(&graph)?, symbol.depth().max(1), bm)?;
        (ZetaSeries::new(&symbol, &nu, depth)?, Some(chosen.id))
    };
    let rows: Vec<ZetaRow> = points
        .iter()
        .map(|&s| {
            let closed_form = if is_one {
                zeta_one_closed(g, s).ok()
            } else {
                None
            };
            if s >= CONVERGENCE_ABSCISSA {
                return Ok(ZetaRow {
                    s,
                    value: None,
                    tail_bound: None,
                    closed_form,
                    status: "rejected: s >= -1/3",
                });
            }
            let v = series.eval(s)?;
            Ok(ZetaRow {
                s,
                value: Some(v.value),
                tail_bound: Some(v.tail_bound),
                closed_form,
                status: "ok",
            })
        })
        .collect::<Result<_, Failure>>()?;
    let symbol_id = symbol.to_string();
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let csv_rows = rows
        .iter()
        .map(|r| {
            let mut row = vec![
                g.to_string(),
                symbol_id.clone(),
                num(r.s),
                opt(r.value),
                opt(r.tail_bound),
                depth.to_string(),
            ];
            if is_one {
                row.push(opt(r.closed_form));
            }
            row.push(r.status.to_string());
            row
        })
        .collect();
    let mut header = vec!["g", "symbol", "s", "value", "tail_bound", "N"];
    if is_one {
        header.push("closed_form");
    }
    header.push("status");
    emit(
        config,
        &Report {
            result: ZetaResult {
                g,
                symbol: symbol_id,
                depth,
                choice: chosen,
                rows,
            },
            header,
            rows: csv_rows,
        },
    )?;
    Ok(Status::Success)
}

fn cmd_compare(
    first: &Path,
    second: &Path,
    depth: usize,
    tol: f64,
    budget: usize,
    config: &RunConfig,
) -> Result<Status, Failure> {
    require_depth(depth)?;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Failure::Input("--tol must be a non-negative number".into()));
    }
    let g1 = read_graph(first)?;
    let g2 = read_graph(second)?;
    let verdict = compare(&g1, &g2, depth, tol, budget)?;
    let status = if verdict.is_equal() {
        Status::Success
    } else {
        Status::Disjoint
    };
    let row = vec![
        enum_text(&verdict.outcome),
        verdict.genus_pair.0.to_string(),
        verdict.genus_pair.1.to_string(),
        depth.to_string(),
        num(tol),
        verdict
            .witness
            .map(|w| format!("{} {}", choice_text(w.first), choice_text(w.second)))
            .unwrap_or_default(),
        verdict.max_deviation.map(num).unwrap_or_default(),
        verdict.budget_truncated.to_string(),
        enum_text(&verdict.decided_at),
    ];
    emit(
        config,
        &Report {
            result: verdict,
            header: vec![
                "outcome",
                "genus_1",
                "genus_2",
                "depth",
                "tol",
                "witness",
                "max_deviation",
                "budget_truncated",
                "decided_at",
            ],
            rows: vec![row],
        },
    )?;
    Ok(status)
}

/// Bare JSON string of a unit enum.
fn enum_text<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn choice_text(id: ChoiceId) -> String {
    format!("{}/{}/{}", id.origin, id.tree, id.arrangement)
}

#[derive(Serialize)]
struct ReconstructResult {
    choices: (ChoiceId, ChoiceId),
    radius: usize,
    #[serde(flatten)]
    reconstruction: Reconstruction,
}

fn cmd_reconstruct(
    first: &Path,
    second: &Path,
    radius: usize,
    choice: &[usize],
    budget: usize,
    config: &RunConfig,
) -> Result<Status, Failure> {
    let g1 = read_graph(first)?;
    let g2 = read_graph(second)?;
    validate(&g1).into_result()?;
    validate(&g2).into_result()?;
    let c1 = resolve_choice(&g1, choice[0], budget)?;
    let c2 = resolve_choice(&g2, choice.get(1).copied().unwrap_or(0), budget)?;
    let reconstruction = reconstruct_ball(&c1.presentation(&g1)?, &c2.presentation(&g2)?, radius)?;
    let (status, rows) = match &reconstruction {
        Reconstruction::Success { map } => (
            Status::Success,
            map.iter()
                .map(|(a, b)| vec![path_text(&g1, a), path_text(&g2, b)])
                .collect(),
        ),
        Reconstruction::Failure { witnesses } => (
            Status::Disjoint,
            witnesses
                .iter()
                .map(|w| vec![serde_json::to_string(w).unwrap_or_default()])
                .collect(),
        ),
    };
    let header = if reconstruction.is_success() {
        vec!["source", "image"]
    } else {
        vec!["witness"]
    };
    emit(
        config,
        &Report {
            result: ReconstructResult {
                choices: (c1.id, c2.id),
                radius,
                reconstruction,
            },
            header,
            rows,
        },
    )?;
    Ok(status)
}
