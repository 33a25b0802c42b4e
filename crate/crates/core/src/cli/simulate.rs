use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::audit::{ExpansionSummary, ExpansionTable};
use super::{missing, SimulateArgs, Testbed};
use crate::error::{Error, Result};
use crate::expansion::{pair_expansion, Expansion, SetPair};
use crate::graph::{write_edges, ExampleGraph};
use crate::population::{partition, LabelAssignment, Population};
use crate::testbeds::{
    cotraining_population, enumerate_hypotheses, planted_population, random_cotraining_spec, CoTrainingSpec,
    HypothesisClassSpec, PlantedConfig,
};

/// Largest planted population whose expansions are enumerated in the summary.
const PLANTED_EXPANSION_POINTS: usize = 12;

/// Tolerance for reporting a coefficient as exactly one.
const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Serialize)]
struct ClassSummary {
    class: usize,
    mass: f64,
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expansions: Option<ExpansionTable>,
}

#[derive(Debug, Serialize)]
struct Summary {
    testbed: Testbed,
    seed: u64,
    n_points: usize,
    num_edges: usize,
    coverage: f64,
    eta: f64,
    q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypothesis_class: Option<&'static str>,
    hypotheses: usize,
    classes: Vec<ClassSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    all_unit_expansion: Option<bool>,
    files: Vec<String>,
}

fn write_file(dir: &Path, name: &str, files: &mut Vec<String>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    body(&mut w)?;
    w.flush()?;
    files.push(name.to_string());
    Ok(())
}

fn class_summaries(
    pop: &Population,
    g: &ExampleGraph,
    hypotheses: Option<&[LabelAssignment]>,
    q: f64,
    eta: f64,
) -> Result<(Vec<ClassSummary>, Vec<Expansion>)> {
    let part = partition(pop);
    let mut all = Vec::new();
    let mut out = Vec::new();
    for cls in &part.classes {
        let expansions = match hypotheses {
            None => None,
            Some(hs) => {
                let mut m = |pair| -> Result<Option<ExpansionSummary>> {
                    let e = pair_expansion(pop, g, cls, hs, pair, q, eta)?;
                    let s = e.as_ref().map(ExpansionSummary::from_expansion);
                    all.extend(e);
                    Ok(s)
                };
                Some(ExpansionTable {
                    bad_good: m(SetPair::BadGood)?,
                    good_t: m(SetPair::GoodT)?,
                    bad_t: m(SetPair::BadT)?,
                    good_bad: m(SetPair::GoodBad)?,
                })
            }
        };
        out.push(ClassSummary {
            class: cls.class,
            mass: pop.mass(&cls.members),
            alpha: cls.alpha,
            expansions,
        });
    }
    Ok((out, all))
}

pub(super) fn run(args: &SimulateArgs) -> Result<Value> {
    let testbed = args.testbed.ok_or_else(|| missing("testbed"))?;
    let seed = args.seed.ok_or_else(|| missing("seed"))?;
    let dir = args.out_dir.as_deref().ok_or_else(|| missing("out-dir"))?;
    std::fs::create_dir_all(dir)?;
    let eta = args.eta.unwrap_or(0.0);
    let q = args.q.unwrap_or(0.0);
    let mut files = Vec::new();

    let (pop, g, hypotheses, class_name, unit) = match testbed {
        Testbed::Cotraining => {
            let spec: CoTrainingSpec = match &args.spec {
                Some(p) => serde_json::from_reader(BufReader::new(File::open(p)?))?,
                None => random_cotraining_spec(seed, args.view1_size.unwrap_or(4), args.view2_size.unwrap_or(3))?,
            };
            let inst = cotraining_population(&spec)?;
            write_file(dir, "cotraining_spec.json", &mut files, |w| {
                serde_json::to_writer_pretty(&mut *w, &spec)?;
                Ok(w.write_all(b"\n")?)
            })?;
            let hs_spec = HypothesisClassSpec::View2Measurable {
                view2_of: inst.view2_of(),
                view2_size: spec.view2_size(),
            };
            let hs = enumerate_hypotheses(&hs_spec, &inst.population)?;
            (inst.population, inst.graph, Some(hs), Some("view2-measurable"), true)
        }
        Testbed::Planted => {
            let cfg = PlantedConfig {
                cross_class: args.cross_class,
                jitter_mass: args.jitter_mass,
                ..PlantedConfig::new(
                    args.n_points.unwrap_or(12),
                    args.alpha.unwrap_or(0.2),
                    args.coverage.unwrap_or(0.7),
                    args.edge_density.unwrap_or(0.4),
                    seed,
                )
            };
            let inst = planted_population(&cfg)?;
            let n = inst.population.len();
            let hs = if n <= PLANTED_EXPANSION_POINTS {
                Some(enumerate_hypotheses(&HypothesisClassSpec::AllDichotomies, &inst.population)?)
            } else {
                None
            };
            let name = hs.as_ref().map(|_| "all-dichotomies");
            (inst.population, inst.graph, hs, name, false)
        }
    };

    write_file(dir, "population.jsonl", &mut files, |w| pop.write_jsonl(w))?;
    write_file(dir, "edges.tsv", &mut files, |w| write_edges(&g, &pop, w))?;

    let (classes, measured) = class_summaries(&pop, &g, hypotheses.as_deref(), q, eta)?;
    let all_unit_expansion = unit.then(|| {
        measured
            .iter()
            .all(|e| e.c().is_some_and(|c| (c - 1.0).abs() <= UNIT_TOL))
    });
    let part = partition(&pop);
    files.push("summary.json".into());
    let summary = Summary {
        testbed,
        seed,
        n_points: pop.len(),
        num_edges: g.num_edges(),
        coverage: pop.mass(&part.covered),
        eta,
        q,
        hypothesis_class: class_name,
        hypotheses: hypotheses.as_ref().map_or(0, Vec::len),
        classes,
        all_unit_expansion,
        files,
    };
    let value = serde_json::to_value(&summary)?;
    let text = serde_json::to_string_pretty(&value)? + "\n";
    std::fs::write(dir.join("summary.json"), text).map_err(Error::from)?;
    Ok(value)
}
