//! Plain-text tables. Rendering reads only the report JSON.

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Audit,
    Bounds,
    Simulate,
    Verify,
}

fn num(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            // Keep rounding noise from printing as -0.000.
            format!("{:.3}", if x.abs() < 5e-4 { 0.0 } else { x })
        }
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out += &line(rule.iter().map(String::as_str).collect());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

fn bound_of<'a>(bounds: &'a Value, theorem: &str) -> Option<&'a Value> {
    bounds.as_array()?.iter().find(|b| b["theorem"] == theorem)
}

fn bound_cell(bounds: &Value, theorem: &str) -> String {
    match bound_of(bounds, theorem) {
        Some(b) if b["applicable"] == true => num(&b["value"]),
        Some(_) => "n/a".into(),
        None => "-".into(),
    }
}

fn audit(v: &Value) -> String {
    let mut out = String::new();
    let classes = v["classes"].as_array().cloned().unwrap_or_default();
    let exp = |c: &Value, key: &str| num(&c["expansions"][key]["c"]);

    out += "covered sets\n";
    let rows: Vec<Vec<String>> = classes
        .iter()
        .map(|c| {
            vec![
                num(&c["class"]),
                exp(c, "bad_good"),
                num(&c["alpha"]),
                num(&c["err_weak"]),
                bound_cell(&c["bounds"], "plc-main"),
                num(&c["err_true_s"]),
            ]
        })
        .collect();
    out += &table(&["class", "c(bad,good)", "alpha", "err_weak", "bound", "true err"], &rows);

    out += "\nuncovered sets\n";
    let rows: Vec<Vec<String>> = classes
        .iter()
        .map(|c| {
            vec![
                num(&c["class"]),
                exp(c, "good_t"),
                exp(c, "bad_t"),
                num(&c["alpha"]),
                num(&c["err_weak"]),
                bound_cell(&c["bounds"], "coverage-main"),
                bound_cell(&c["bounds"], "coverage-weak"),
                num(&c["err_true_t"]),
            ]
        })
        .collect();
    out += &table(
        &["class", "c(good,T)", "c(bad,T)", "alpha", "err_weak", "bound", "weak bound", "true err"],
        &rows,
    );

    if let Some(ex) = v["excluded"].as_array().filter(|e| !e.is_empty()) {
        out += "\nexcluded:";
        for e in ex {
            out += &format!(" class {} ({})", num(&e["class"]), num(&e["reason"]));
        }
        out += "\n";
    }
    if v["global"].is_object() {
        let g = &v["global"];
        out += &format!(
            "\ncoverage {}  alpha {}  teacher-only bound {}\n",
            num(&g["coverage"]),
            num(&g["alpha"]),
            bound_cell(&g["bounds"], "fu-baseline")
        );
    }
    out += &format!(
        "robustness: {}  eta {}  q {}\n",
        num(&v["robustness"]),
        num(&v["eta"]),
        num(&v["q"])
    );
    out
}

fn bounds(v: &Value) -> String {
    let rows: Vec<Vec<String>> = v["reports"]
        .as_array()
        .map(|rs| {
            rs.iter()
                .map(|r| {
                    let failed: Vec<String> = r["preconditions"]
                        .as_array()
                        .map(|ps| {
                            ps.iter()
                                .filter(|p| p["satisfied"] == false)
                                .map(|p| num(&p["name"]))
                                .collect()
                        })
                        .unwrap_or_default();
                    vec![
                        num(&r["theorem"]),
                        num(&r["applicable"]),
                        num(&r["value"]),
                        failed.join(", "),
                    ]
                })
                .collect()
        })
        .unwrap_or_default();
    table(&["theorem", "applicable", "value", "failed"], &rows)
}

fn verify(v: &Value) -> String {
    let rows: Vec<Vec<String>> = v["reports"]
        .as_array()
        .map(|rs| {
            rs.iter()
                .map(|r| {
                    vec![
                        num(&r["theorem"]),
                        num(&r["instances"]),
                        num(&r["applicable"]),
                        num(&r["vacuous"]),
                        r["violations"].as_array().map_or(0, Vec::len).to_string(),
                        num(&r["min_slack"]),
                    ]
                })
                .collect()
        })
        .unwrap_or_default();
    table(
        &["theorem", "checks", "applicable", "vacuous", "violations", "min slack"],
        &rows,
    )
}

fn simulate(v: &Value) -> String {
    let exp = |c: &Value, key: &str| num(&c["expansions"][key]["c"]);
    let rows: Vec<Vec<String>> = v["classes"]
        .as_array()
        .map(|cs| {
            cs.iter()
                .map(|c| {
                    vec![
                        num(&c["class"]),
                        num(&c["mass"]),
                        num(&c["alpha"]),
                        exp(c, "bad_good"),
                        exp(c, "good_t"),
                        exp(c, "bad_t"),
                        exp(c, "good_bad"),
                    ]
                })
                .collect()
        })
        .unwrap_or_default();
    let mut out = format!(
        "{} seed {}: {} points, {} edges, coverage {}\n",
        num(&v["testbed"]),
        num(&v["seed"]),
        num(&v["n_points"]),
        num(&v["num_edges"]),
        num(&v["coverage"])
    );
    out += &table(
        &["class", "mass", "alpha", "c(bad,good)", "c(good,T)", "c(bad,T)", "c(good,bad)"],
        &rows,
    );
    out
}

pub fn render(kind: Kind, v: &Value) -> String {
    match kind {
        Kind::Audit => audit(v),
        Kind::Bounds => bounds(v),
        Kind::Simulate => simulate(v),
        Kind::Verify => verify(v),
    }
}
