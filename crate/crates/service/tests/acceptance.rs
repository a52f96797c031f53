//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::time::{Duration, Instant};

use arcforge_core::arc::ArcKind;
use arcforge_core::entity::{export_game_json, parse_game_json, GameSpec};
use arcforge_core::graph::{validate_graph, StoryGraph};
use arcforge_core::pipeline::{
    finalize, generate_skeleton, run_study, FinalizeOptions, GenerationRequest, StudyConfig,
    TemplateBackend,
};
use arcforge_core::report::ViolationCode;
use arcforge_core::sim::{audit_difficulty, check_traversability};
use arcforge_core::valence::{
    node_valence, taxonomy, EmotionPrediction, LexiconScorer, ValenceMap,
};
use arcforge_service::{
    BackendChoice, CreateProject, ProjectService, ProjectStore, RemoteSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PROMPT: &str = "A young smith must recover a stolen hammer";

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn graph_validity() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for seed in 0..200u64 {
        let arc = ArcKind::ALL[seed as usize % 6];
        let nodes = 3 + (seed as usize / 6) % 10;
        let req = GenerationRequest::new(PROMPT, arc, nodes);
        match generate_skeleton(&req, &TemplateBackend::new(seed)) {
            Ok(g) => {
                let t = arc.template();
                if !validate_graph(&g, t.as_ref(), 1).ok || g.nodes.len() > nodes {
                    bad.push(format!("{arc}/{nodes}"));
                }
            }
            Err(e) => bad.push(format!("{arc}/{nodes}: {e}")),
        }
    }
    let took = start.elapsed();
    outcome(
        bad.is_empty() && took < Duration::from_secs(10),
        format!(
            "{}/200 valid in {} (limit 10s) {bad:?}",
            200 - bad.len(),
            secs(took)
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut disagreements, mut valid) = (0, 0);
    for _ in 0..1000 {
        let (g, min_endings) = oracle::random_graph(&mut rng);
        let t = g.arc.template();
        let verdict = validate_graph(&g, t.as_ref(), min_endings).ok;
        let expected = oracle::brute_force_valid(&g, min_endings);
        valid += usize::from(expected);
        disagreements += usize::from(verdict != expected);
    }
    outcome(
        disagreements == 0,
        format!(
            "{disagreements} disagreements over 1000 graphs ({valid} valid, {} invalid)",
            1000 - valid
        ),
    )
}

fn sign(label: &str) -> f64 {
    match label {
        "admiration" | "amusement" | "approval" | "caring" | "desire" | "excitement"
        | "gratitude" | "joy" | "love" | "optimism" | "pride" | "relief" => 1.0,
        "anger" | "annoyance" | "disappointment" | "disapproval" | "disgust" | "embarrassment"
        | "fear" | "grief" | "nervousness" | "remorse" | "sadness" => -1.0,
        _ => 0.0,
    }
}

fn valence_arithmetic() -> Outcome {
    let map = ValenceMap::default();
    let p = EmotionPrediction::new;
    // 0.5 - 0.3 = 0.2; neutral adds nothing and fear (0.05) is cut off.
    let worked = node_valence(
        &[
            p("joy", 0.5),
            p("sadness", 0.3),
            p("neutral", 0.15),
            p("fear", 0.05),
        ],
        &map,
        0.1,
    )
    .unwrap();
    // Exactly at the cutoff counts: 0.1; grief just below does not.
    let boundary = node_valence(&[p("love", 0.1), p("grief", 0.099_999)], &map, 0.1).unwrap();
    let mut worst = (worked - 0.2).abs().max((boundary - 0.1).abs());

    let labels: Vec<&str> = taxonomy().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let preds: Vec<EmotionPrediction> = (0..rng.gen_range(0..12))
            .map(|_| {
                // Snap a share of probabilities onto the cutoff itself.
                let prob = if rng.gen_bool(0.1) {
                    0.1
                } else {
                    rng.gen::<f64>()
                };
                p(labels[rng.gen_range(0..labels.len())], prob)
            })
            .collect();
        let expected: f64 = preds
            .iter()
            .filter(|x| x.prob >= 0.1)
            .map(|x| x.prob * sign(&x.label))
            .sum();
        let got = node_valence(&preds, &map, 0.1).unwrap();
        worst = worst.max((got - expected).abs());
    }
    outcome(
        worst < 1e-9,
        format!("max abs error {worst:.2e} over 10002 cases (tolerance 1e-9)"),
    )
}

fn shape_reproduction() -> Outcome {
    let start = Instant::now();
    let out = run_study(
        &StudyConfig::new(PROMPT),
        |seed| Box::new(TemplateBackend::new(seed)),
        &LexiconScorer::default(),
        &ValenceMap::default(),
    );
    let took = start.elapsed();
    match out {
        Ok(out) => {
            let unmatched: Vec<&str> = ArcKind::ALL
                .iter()
                .filter(|k| {
                    !out.report.arc(**k).is_some_and(|a| {
                        a.stories.len() == 10
                            && a.mean.len() == 7
                            && a.shape.as_ref().is_some_and(|s| s.matched)
                    })
                })
                .map(|k| k.as_str())
                .collect();
            outcome(
                unmatched.is_empty() && took < Duration::from_secs(30),
                format!(
                    "{}/6 arcs sign-match over 10x7-node stories in {} (limit 30s) {unmatched:?}",
                    6 - unmatched.len(),
                    secs(took)
                ),
            )
        }
        Err(e) => outcome(false, format!("study failed: {e}")),
    }
}

fn finalized_specs() -> Result<Vec<(GameSpec, StoryGraph)>, String> {
    (0..100u64)
        .map(|seed| {
            let arc = ArcKind::ALL[seed as usize % 6];
            let req = GenerationRequest::new(PROMPT, arc, 3 + (seed as usize / 6) % 10);
            let b = TemplateBackend::new(1000 + seed);
            let g = generate_skeleton(&req, &b).map_err(|e| format!("{arc}: {e}"))?;
            let f = finalize(&g, &req, &b, &FinalizeOptions::default())
                .map_err(|e| format!("{arc}: {e}"))?;
            Ok((f.spec, f.graph))
        })
        .collect()
}

fn difficulty_alignment(specs: &[(GameSpec, StoryGraph)]) -> Outcome {
    let (mut both, mut aligned) = (0, 0);
    for (spec, g) in specs {
        let Ok(audit) = audit_difficulty(spec, g, &Default::default()) else {
            return outcome(false, "audit failed on a finalized spec");
        };
        if let (Some(f), Some(r)) = (audit.mean_fall, audit.mean_rise) {
            both += 1;
            aligned += usize::from(f > r);
        }
    }
    outcome(
        both > 0 && aligned == both,
        format!("mean_fall > mean_rise in {aligned}/{both} specs with both labels"),
    )
}

fn traversability(specs: &[(GameSpec, StoryGraph)]) -> Outcome {
    let stuck = specs
        .iter()
        .filter(|(s, g)| check_traversability(s, g).has(ViolationCode::Stuck))
        .count();
    let (mut injected, mut detected) = (0, 0);
    for (spec, g) in specs {
        for li in 0..spec.level_list.len() {
            if spec.level_list[li].next.is_empty() {
                continue;
            }
            let mut broken = spec.clone();
            let level = &mut broken.level_list[li];
            let target = level.next[0].criteria.target.to_lowercase();
            level
                .entity
                .npcs
                .retain(|n| n.name.to_lowercase() != target);
            level
                .entity
                .items
                .retain(|i| i.name.to_lowercase() != target);
            injected += 1;
            detected += usize::from(check_traversability(&broken, g).has(ViolationCode::Stuck));
        }
    }
    outcome(
        stuck == 0 && injected > 0 && detected == injected,
        format!("{stuck} specs with STUCK; {detected}/{injected} injected faults detected"),
    )
}

fn round_trips(specs: &[(GameSpec, StoryGraph)]) -> Outcome {
    let mut export_bad = 0;
    for (spec, _) in specs {
        let ok = export_game_json(spec)
            .and_then(|a| {
                parse_game_json(&a)
                    .and_then(|s| export_game_json(&s))
                    .map(|b| a == b)
            })
            .unwrap_or(false);
        export_bad += usize::from(!ok);
    }

    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("tempdir: {e}")),
    };
    let mut project_bad = 0;
    let store = ProjectStore::open(dir.path()).expect("store opens");
    let svc = ProjectService::new(store.clone(), RemoteSettings::default());
    let arcs = ArcKind::ALL.iter().chain([ArcKind::None].iter());
    for (i, &arc) in arcs.enumerate() {
        let created = svc.create_project(CreateProject {
            request: GenerationRequest::new(PROMPT, arc, 7),
            backend: BackendChoice::Template { seed: i as u64 },
            options: Default::default(),
        });
        let Ok(p) = created else {
            project_bad += 1;
            continue;
        };
        let before = store.load(&p.id).ok();
        let finalized = svc.finalize(&p.id).is_ok();
        let after = store.load(&p.id).ok();
        let live = svc.get(&p.id).ok();
        let equal = finalized
            && before.as_ref() == Some(&*p)
            && after.is_some()
            && after.as_ref() == live.as_deref();
        project_bad += usize::from(!equal);
    }
    outcome(
        export_bad == 0 && project_bad == 0,
        format!(
            "{} export mismatches over {} specs; {project_bad} project reload mismatches over 7 projects",
            export_bad,
            specs.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("graph validity", graph_validity()),
        ("arc-consistency oracle equivalence", oracle_equivalence()),
        ("valence arithmetic", valence_arithmetic()),
        ("shape reproduction", shape_reproduction()),
    ];
    match finalized_specs() {
        Ok(specs) => {
            results.push(("difficulty alignment", difficulty_alignment(&specs)));
            results.push(("traversability", traversability(&specs)));
            results.push(("round-trips", round_trips(&specs)));
        }
        Err(e) => {
            for name in ["difficulty alignment", "traversability", "round-trips"] {
                results.push((name, outcome(false, format!("finalize failed: {e}"))));
            }
        }
    }
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "{} {}. {name}: {}",
            if o.ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
