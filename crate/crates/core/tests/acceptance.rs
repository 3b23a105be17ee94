//! Acceptance run: one pass/fail line per criterion, with its time limit.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use kr2kh::bridge::{
    alternative_base_points, build_bridge, compute_tau, split_marks_tau, tau_multipath_check, verify,
    verify_proposition, verify_theorem, EdgeSource,
};
use kr2kh::diagram::{builtin, LinkDiagram, Sign, SmoothingVertex};
use kr2kh::khcube::{assemble_kh_complex, build_kh_cube, kauffman_bracket_jones, khovanov_homology, EdgeKind};
use kr2kh::koszul::{chi0, chi1};
use kr2kh::krcube::{
    assemble_kr_complex, build_vertex_mf, calibrate_generators, crossing_vars, fast_edges, kr_homology,
    oracle_edges, p_shift, reduce_all, KrCube,
};
use kr2kh::poly::MultiPoly;

const STRUCTURAL: &[&str] = &[
    "unknot",
    "unknot-kink+",
    "unknot-kink-",
    "hopf+",
    "hopf-",
    "trefoil",
    "trefoil-mirror",
    "figure8",
];

const DESK: &[&str] = &[
    "unknot",
    "unknot-kink+",
    "unknot-kink-",
    "unlink2",
    "hopf+",
    "hopf-",
    "trefoil",
    "trefoil-mirror",
    "trefoil-kink",
    "figure8",
];

type Outcome = Result<String, String>;

fn diagram(name: &str) -> LinkDiagram {
    builtin(name).expect("built-in diagram")
}

fn calibrated(d: &LinkDiagram) -> Result<(KrCube, Vec<i32>), String> {
    let mut cube = reduce_all(d).map_err(|e| e.to_string())?;
    let tau = compute_tau(d, None).map_err(|e| e.to_string())?.values;
    calibrate_generators(d, &mut cube, &tau).map_err(|e| e.to_string())?;
    Ok((cube, tau))
}

fn structural() -> Outcome {
    let mut faces = 0;
    for name in STRUCTURAL {
        let d = diagram(name);
        assemble_kh_complex(&build_kh_cube(&d)).check().map_err(|e| format!("{name} Kh: {e}"))?;
        let (cube, tau) = calibrated(&d)?;
        let edges = fast_edges(&d, &cube, &tau).map_err(|e| e.to_string())?;
        assemble_kr_complex(&cube, &edges).check().map_err(|e| format!("{name} KR: {e}"))?;
        for v in &cube.vertices {
            let (mf, _) = build_vertex_mf(&d, &v.vertex).map_err(|e| e.to_string())?;
            if !mf.potential().is_zero() {
                return Err(format!("{name}: nonzero potential at {}", v.vertex));
            }
        }
        for c in 0..d.n_crossings() {
            let cv = crossing_vars(&d, c);
            let zik = &MultiPoly::var(cv.i) - &MultiPoly::var(cv.k);
            let (c0, c1) = (chi0(cv), chi1(cv));
            for parity in 0..2 {
                let a = c1.compose(&c0).matrix(parity).map_err(|e| e.to_string())?;
                let b = c0.compose(&c1).matrix(parity).map_err(|e| e.to_string())?;
                if !a.is_scalar(&zik) || !b.is_scalar(&zik) {
                    return Err(format!("{name}: chi composition at crossing {c}"));
                }
            }
            faces += 1;
        }
    }
    Ok(format!(
        "{} diagrams: d^2 = 0 in both complexes, zero potentials, chi compositions at {faces} crossings",
        STRUCTURAL.len()
    ))
}

fn reduced_dimensions() -> Outcome {
    let mut vertices = 0;
    for name in STRUCTURAL {
        let d = diagram(name);
        let cube = reduce_all(&d).map_err(|e| e.to_string())?;
        for (idx, v) in cube.vertices.iter().enumerate() {
            let s = d.smooth(&SmoothingVertex::from_index(idx, d.n_crossings())).map_err(|e| e.to_string())?.len();
            let p = p_shift(&d, &v.vertex);
            let mut degrees: Vec<i64> = (0..v.dim()).map(|m| v.q_degree(m)).collect();
            degrees.sort();
            let mirrored: Vec<i64> = degrees.iter().rev().map(|q| 2 * p - q).collect();
            if v.dim() != 1 << s || degrees[0] != -(s as i64) + p || degrees != mirrored {
                return Err(format!("{name} at {}: dim {} for s = {s}, degrees {degrees:?}", v.vertex, v.dim()));
            }
            vertices += 1;
        }
    }
    Ok(format!("{vertices} vertices: dimension 2^s, lowest degree -s + p_v, symmetric about p_v"))
}

fn oracle_equivalence() -> Outcome {
    let mut edges_checked = 0;
    // (merge unit, split y+z, split y-z) counts
    let mut formulas = [0usize; 3];
    for name in ["trefoil", "hopf+", "hopf-"] {
        let d = diagram(name);
        let (cube, tau) = calibrated(&d)?;
        let fast = fast_edges(&d, &cube, &tau).map_err(|e| e.to_string())?;
        let oracle = oracle_edges(&d, &cube).map_err(|e| e.to_string())?;
        for (f, o) in fast.iter().zip(&oracle) {
            if f != o {
                return Err(format!("{name}: edge {} -> {} differs", f.source, f.target));
            }
            let c = f.edge.crossing;
            let positive = d.crossings()[c].sign == Sign::Positive;
            match f.kind {
                EdgeKind::Merge { .. } => {
                    let g = o.apply_basis(0);
                    if g.len() != 1 || g.get(&0).is_none_or(|x| *x != num_traits::One::one()) {
                        return Err(format!("{name}: merge {} -> {} is not unit", f.source, f.target));
                    }
                    formulas[0] += 1;
                }
                EdgeKind::Split { .. } => {
                    let (relative, _) = split_marks_tau(&d, &cube.vertices[f.edge.to], c, &tau)
                        .ok_or_else(|| format!("{name}: no split marks at crossing {c}"))?;
                    // J configuration at positive crossings: y + z; G at negative: y - z
                    match (positive, relative) {
                        (true, 1) => formulas[1] += 1,
                        (false, -1) => formulas[2] += 1,
                        _ => return Err(format!("{name}: split at crossing {c} has the wrong local form")),
                    }
                }
            }
            edges_checked += 1;
        }
    }
    if formulas.iter().any(|&n| n == 0) {
        return Err(format!("a local formula was never exercised: {formulas:?}"));
    }
    Ok(format!(
        "{edges_checked} edges equal exactly; merges unit ({}), J splits y+z ({}), G splits y-z ({})",
        formulas[0], formulas[1], formulas[2]
    ))
}

fn tau_well_defined() -> Outcome {
    let mut paths = 0;
    for name in DESK.iter().chain(&["torus7"]) {
        let d = diagram(name);
        let tau = compute_tau(&d, None).map_err(|e| e.to_string())?;
        let report = tau_multipath_check(&d, &tau, usize::MAX);
        if !report.exhaustive || !report.passed() {
            return Err(format!("{name}: {:?}", report.conflicts.first()));
        }
        paths += report.paths_checked;
    }
    // a full verification of the 7-crossing diagram is timed by the scale check
    for name in DESK {
        let d = diagram(name);
        let a = verify(&d, None, EdgeSource::Fast).map_err(|e| e.to_string())?;
        let b = verify(&d, Some(&alternative_base_points(&d)), EdgeSource::Fast).map_err(|e| e.to_string())?;
        if a.outcomes() != b.outcomes() {
            return Err(format!("{name}: outcomes depend on the base points"));
        }
    }
    Ok(format!(
        "{paths} admissible paths agree on all built-ins; outcomes unchanged under moved base points"
    ))
}

fn proposition() -> Outcome {
    let mut edges = 0;
    for name in DESK {
        let d = diagram(name);
        let data = build_bridge(&d, None, EdgeSource::Oracle).map_err(|e| format!("{name}: {e}"))?;
        for check in verify_proposition(&d, &data) {
            if !check.passed() {
                return Err(format!("{name}: {}: {}", check.name, check.detail));
            }
        }
        edges += data.edges.len();
    }
    Ok(format!("{edges} edges commute with theta; degrees preserved and negated"))
}

fn theorem() -> Outcome {
    for name in DESK {
        let d = diagram(name);
        let data = build_bridge(&d, None, EdgeSource::Fast).map_err(|e| format!("{name}: {e}"))?;
        let report = verify_theorem(&d, &data).map_err(|e| e.to_string())?;
        if report.kh != report.kr.q_mirror() {
            return Err(format!("{name}: {} vs {}", report.kh.poincare(), report.kr.q_mirror().poincare()));
        }
    }
    Ok(format!("{} diagrams: dim H^(i,j) = dim H_2^(i,-j)", DESK.len()))
}

fn euler() -> Outcome {
    for name in DESK {
        let d = diagram(name);
        let jones = kauffman_bracket_jones(&d);
        let kh = khovanov_homology(&d).map_err(|e| e.to_string())?;
        let (cube, tau) = calibrated(&d)?;
        let kr = kr_homology(&cube, &fast_edges(&d, &cube, &tau).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        if kh.euler_characteristic() != jones || kr.euler_characteristic().invert_q() != jones {
            return Err(format!("{name}: state sum {jones}"));
        }
    }
    Ok(format!("{} diagrams match the state sum", DESK.len()))
}

fn tables(name: &str) -> Result<(String, String), String> {
    let d = diagram(name);
    let kh = khovanov_homology(&d).map_err(|e| e.to_string())?;
    let (cube, tau) = calibrated(&d)?;
    let kr = kr_homology(&cube, &fast_edges(&d, &cube, &tau).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    Ok((kh.poincare().to_string(), kr.poincare().to_string()))
}

fn invariance() -> Outcome {
    for group in [&["unknot", "unknot-kink+", "unknot-kink-"][..], &["trefoil", "trefoil-kink"][..]] {
        let first = tables(group[0])?;
        for other in &group[1..] {
            if tables(other)? != first {
                return Err(format!("{} and {other} differ", group[0]));
            }
        }
    }
    Ok("0- and 1-crossing unknots agree; trefoil agrees with its kinked diagram".to_string())
}

fn scale() -> Outcome {
    let d = diagram("torus7");
    let report = verify(&d, None, EdgeSource::Fast).map_err(|e| e.to_string())?;
    if !report.passed() {
        let failed: Vec<String> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
        return Err(format!("failed checks: {}", failed.join(", ")));
    }
    let max_dim = reduce_all(&d).map_err(|e| e.to_string())?.vertices.iter().map(|v| v.dim()).max().unwrap_or(0);
    if max_dim > 256 {
        return Err(format!("vertex module of dimension {max_dim}"));
    }
    Ok(format!(
        "7 crossings, 128 vertices, largest module {max_dim}; Kh {}",
        report.theorem.kh.poincare()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 9] = [
        ("structural invariants", 10, structural),
        ("reduced vertex dimensions", 10, reduced_dimensions),
        ("oracle equivalence", 60, oracle_equivalence),
        ("tau well-defined", 60, tau_well_defined),
        ("identifying cubes", 60, proposition),
        ("homology isomorphism", 60, theorem),
        ("euler characteristic", 60, euler),
        ("invariance spot check", 60, invariance),
        ("scale check", 300, scale),
    ];
    let mut all = true;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let (ok, detail) = match outcome {
            Ok(d) if in_time => (true, d),
            Ok(d) => (false, format!("{d}; over the time limit")),
            Err(e) => (false, e),
        };
        all &= ok;
        println!(
            "criterion {} {}: {name} ({:.2}s, limit {limit}s) {detail}",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
