use std::collections::BTreeSet;

use serde::Deserialize;
use serde_json::Value;

use super::prompts::{
    entity_instructions, revision_instructions, skeleton_instructions, user_prompt, with_feedback,
    CriteriaContext, EntityContext, NodeBrief, OutgoingTrigger, PlayerContext, RevisionContext,
    SkeletonContext, CRITERIA_SYSTEM, ENTITY_SYSTEM, PLAYER_SYSTEM, REVISION_SYSTEM,
    SKELETON_SYSTEM,
};
use super::schema::parse_structured_output;
use super::{
    ChainState, FinalizeOptions, GenerationRequest, MindReset, OutputError, PipelineError,
    SchemaId, TextGenBackend, REPAIR_ATTEMPTS, SKELETON_ATTEMPTS,
};
use crate::arc::{ArcDirection, ArcTemplate};
use crate::entity::{
    apply_difficulty, carry_over, validate_spec, ContinuityLedger, DifficultyMode, GameSpec, Level,
    LevelEntities, NextLevel, PlayerData,
};
use crate::graph::{
    linearize, parse_trigger, validate_graph_with, GraphRules, StoryEdge, StoryGraph, StoryNode,
    Trigger, TriggerKind,
};
use crate::report::{Subject, ValidationReport, ViolationCode};
use crate::sim::check_traversability;
use crate::text::{truncate_words, word_count};

#[derive(Deserialize)]
struct SkeletonNode {
    idx: u32,
    label: Option<String>,
    storyline: String,
    #[serde(default)]
    goal: String,
}

#[derive(Deserialize)]
struct SkeletonEdge {
    from: u32,
    to: u32,
    criteria: String,
}

#[derive(Deserialize)]
struct SkeletonDoc {
    root: u32,
    nodes: Vec<SkeletonNode>,
    edges: Vec<SkeletonEdge>,
}

/// Parses, checks and deserializes one backend answer.
fn typed<T: for<'de> Deserialize<'de>>(raw: &str, schema: SchemaId) -> Result<T, String> {
    let v: Value = parse_structured_output(raw, schema).map_err(|e| e.to_string())?;
    serde_json::from_value(v).map_err(|e| format!("{schema} output does not fit: {e}"))
}

fn parse_label(label: Option<&str>) -> Result<Option<ArcDirection>, String> {
    match label.map(str::trim) {
        None | Some("") => Ok(None),
        Some(l) if l.eq_ignore_ascii_case("none") || l.eq_ignore_ascii_case("null") => Ok(None),
        Some(l) => l
            .parse()
            .map(Some)
            .map_err(|_| format!("unknown label `{l}`")),
    }
}

fn rules<'a>(template: Option<&'a ArcTemplate>, req: &GenerationRequest) -> GraphRules<'a> {
    GraphRules {
        template,
        min_endings: req.min_endings,
        storyline_word_cap: Some(req.storyline_word_cap),
    }
}

/// Grounds edge criteria, asking the backend to rewrite any that name no
/// recognisable interaction.
fn resolve_criteria(
    edge: &SkeletonEdge,
    nodes: &[SkeletonNode],
    taken: &mut BTreeSet<String>,
    backend: &dyn TextGenBackend,
) -> Result<Result<Trigger, String>, PipelineError> {
    if let Ok(t) = parse_trigger(&edge.criteria) {
        return Ok(Ok(t));
    }
    let text = |idx: u32| {
        nodes
            .iter()
            .find(|n| n.idx == idx)
            .map(|n| n.storyline.clone())
            .unwrap_or_default()
    };
    let ctx = CriteriaContext {
        from: edge.from,
        to: edge.to,
        from_label: nodes
            .iter()
            .find(|n| n.idx == edge.from)
            .and_then(|n| parse_label(n.label.as_deref()).ok().flatten()),
        from_storyline: text(edge.from),
        to_storyline: text(edge.to),
        rejected: edge.criteria.clone(),
        taken_targets: taken.iter().cloned().collect(),
    };
    let base = user_prompt(
        "The criteria under `rejected` does not name a talk, pick-up or defeat interaction. Write a replacement.",
        &ctx,
    );
    let mut user = base.clone();
    let mut last = format!("unparseable criteria `{}`", edge.criteria);
    for _ in 0..REPAIR_ATTEMPTS {
        let raw = backend.complete(CRITERIA_SYSTEM, &user, SchemaId::Criteria)?;
        #[derive(Deserialize)]
        struct Doc {
            criteria: String,
        }
        match typed::<Doc>(&raw, SchemaId::Criteria)
            .and_then(|d| parse_trigger(&d.criteria).map_err(|e| e.to_string()))
        {
            Ok(t) => {
                taken.insert(t.target.to_lowercase());
                return Ok(Ok(t));
            }
            Err(e) => {
                user = with_feedback(&base, &e);
                last = e;
            }
        }
    }
    Ok(Err(last))
}

fn build_graph(
    doc: SkeletonDoc,
    req: &GenerationRequest,
    backend: &dyn TextGenBackend,
) -> Result<Result<StoryGraph, String>, PipelineError> {
    let mut taken: BTreeSet<String> = doc
        .edges
        .iter()
        .filter_map(|e| parse_trigger(&e.criteria).ok())
        .map(|t| t.target.to_lowercase())
        .collect();
    let mut g = StoryGraph::new(req.arc, doc.root);
    for n in &doc.nodes {
        let label = match parse_label(n.label.as_deref()) {
            Ok(l) => l,
            Err(e) => return Ok(Err(e)),
        };
        let mut node = StoryNode::new(
            n.idx,
            label,
            truncate_words(&n.storyline, req.storyline_word_cap),
        );
        node.goal = n.goal.clone();
        g.nodes.push(node);
    }
    for e in &doc.edges {
        match resolve_criteria(e, &doc.nodes, &mut taken, backend)? {
            Ok(criteria) => g.edges.push(StoryEdge {
                from: e.from,
                to: e.to,
                criteria,
            }),
            Err(msg) => return Ok(Err(format!("edge {}->{}: {msg}", e.from, e.to))),
        }
    }
    let _ = g.recompute_levels();
    Ok(Ok(g))
}

/// Skeleton and criteria steps, retried until the graph validates.
pub fn generate_skeleton(
    req: &GenerationRequest,
    backend: &dyn TextGenBackend,
) -> Result<StoryGraph, PipelineError> {
    req.validate()?;
    let template = req.arc.template();
    let mut feedback: Vec<String> = Vec::new();
    let mut last = ValidationReport::new();
    for attempt in 0..SKELETON_ATTEMPTS {
        let ctx = SkeletonContext {
            prompt: req.prompt.clone(),
            arc: req.arc,
            segments: template
                .as_ref()
                .map(|t| t.segments.clone())
                .unwrap_or_default(),
            node_budget: req.node_budget,
            min_endings: req.min_endings,
            storyline_word_cap: req.storyline_word_cap,
            attempt,
            feedback: feedback.clone(),
        };
        let user = user_prompt(&skeleton_instructions(&ctx), &ctx);
        let raw = backend.complete(SKELETON_SYSTEM, &user, SchemaId::StorySkeleton)?;
        let built = typed::<SkeletonDoc>(&raw, SchemaId::StorySkeleton)
            .map(|doc| build_graph(doc, req, backend));
        let g = match built {
            Ok(Ok(Ok(g))) => g,
            Ok(Err(e)) => return Err(e),
            Ok(Ok(Err(msg))) | Err(msg) => {
                last = ValidationReport::new();
                last.note(format!("attempt {attempt}: {msg}"));
                feedback = vec![msg];
                continue;
            }
        };
        let mut report = validate_graph_with(&g, &rules(template.as_ref(), req));
        if g.nodes.len() > req.node_budget {
            report.push(
                ViolationCode::NodeBudgetExceeded,
                Subject::Graph,
                format!(
                    "{} nodes exceed the budget of {}",
                    g.nodes.len(),
                    req.node_budget
                ),
            );
        }
        if report.ok {
            return Ok(g);
        }
        feedback = report
            .violations
            .iter()
            .map(|v| v.message.clone())
            .collect();
        last = report;
    }
    Err(PipelineError::GenerationFailed {
        attempts: SKELETON_ATTEMPTS,
        report: last,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Revision {
    pub node: StoryNode,
    /// The backend overran the word cap twice and the text was cut.
    pub truncated: bool,
}

/// Rewrites one node's storyline under its direction's tone instruction.
pub fn revise_node(
    reset: &MindReset,
    history: &[String],
    node: &StoryNode,
    backend: &dyn TextGenBackend,
    word_cap: usize,
) -> Result<Revision, PipelineError> {
    let label = node.label.ok_or_else(|| {
        PipelineError::Precondition(format!("node {} has no arc label", node.idx))
    })?;
    if label != reset.direction {
        return Err(PipelineError::Precondition(format!(
            "node {} is labeled {label:?} but the tone instruction is for {:?}",
            node.idx, reset.direction
        )));
    }
    let ctx = RevisionContext {
        direction: reset.direction,
        instruction: reset.instruction.clone(),
        history: history.to_vec(),
        storyline: node.storyline.clone(),
        goal: node.goal.clone(),
        word_cap,
    };
    let base = user_prompt(&revision_instructions(&ctx), &ctx);
    let mut user = base.clone();
    let mut overrun: Option<String> = None;
    let mut last_err: Option<OutputError> = None;
    #[derive(Deserialize)]
    struct Doc {
        storyline: String,
    }
    for _ in 0..=REPAIR_ATTEMPTS {
        let raw = backend.complete(REVISION_SYSTEM, &user, SchemaId::RevisedStoryline)?;
        let text = match parse_structured_output(&raw, SchemaId::RevisedStoryline) {
            Ok(v) => match serde_json::from_value::<Doc>(v) {
                Ok(d) => d.storyline.trim().to_string(),
                Err(e) => {
                    user = with_feedback(&base, &e.to_string());
                    continue;
                }
            },
            Err(e) => {
                user = with_feedback(&base, &e.to_string());
                last_err = Some(e);
                continue;
            }
        };
        let words = word_count(&text);
        if words <= word_cap {
            let mut out = node.clone();
            out.storyline = text;
            return Ok(Revision {
                node: out,
                truncated: false,
            });
        }
        if overrun.is_some() {
            overrun = Some(text);
            break;
        }
        user = with_feedback(
            &base,
            &format!("the storyline has {words} words; the limit is {word_cap}"),
        );
        overrun = Some(text);
    }
    match (overrun, last_err) {
        (Some(text), _) => {
            let mut out = node.clone();
            out.storyline = truncate_words(&text, word_cap);
            Ok(Revision {
                node: out,
                truncated: true,
            })
        }
        (None, Some(e)) => Err(e.into()),
        (None, None) => Err(OutputError::Parse {
            schema: SchemaId::RevisedStoryline,
        }
        .into()),
    }
}

/// Storylines of all nodes on strictly lower levels, in linearized order.
fn ancestors_history(g: &StoryGraph, level_index: u32) -> Vec<String> {
    linearize(g)
        .into_iter()
        .filter(|n| n.level_index < level_index)
        .map(|n| n.storyline.clone())
        .collect()
}

/// Revises every labeled node level by level. Unlabeled (baseline) graphs
/// are returned unchanged. The second value lists truncated node ids.
pub fn revise_all(
    graph: &StoryGraph,
    backend: &dyn TextGenBackend,
    word_cap: usize,
) -> Result<(StoryGraph, Vec<u32>), PipelineError> {
    let mut g = graph.clone();
    let _ = g.recompute_levels();
    let mut truncated = Vec::new();
    if g.arc.is_none() {
        return Ok((g, truncated));
    }
    let order: Vec<u32> = linearize(&g).iter().map(|n| n.idx).collect();
    for idx in order {
        let node = g.node(idx).expect("linearized node exists").clone();
        let label = node
            .label
            .ok_or_else(|| PipelineError::Precondition(format!("node {idx} has no arc label")))?;
        let history = ancestors_history(&g, node.level_index);
        let r = revise_node(
            &MindReset::for_direction(label),
            &history,
            &node,
            backend,
            word_cap,
        )?;
        if r.truncated {
            truncated.push(idx);
        }
        *g.node_mut(idx).expect("node exists") = r.node;
    }
    Ok((g, truncated))
}

pub fn generate_player(
    req: &GenerationRequest,
    backend: &dyn TextGenBackend,
) -> Result<PlayerData, PipelineError> {
    let ctx = PlayerContext {
        prompt: req.prompt.clone(),
        arc: req.arc,
    };
    let base = user_prompt(
        &format!("Story prompt: {}\nCreate the player character.", req.prompt),
        &ctx,
    );
    let mut user = base.clone();
    #[derive(Deserialize)]
    struct Doc {
        #[serde(rename = "playerData")]
        player: PlayerData,
    }
    let mut last = String::new();
    for _ in 0..=REPAIR_ATTEMPTS {
        let raw = backend.complete(PLAYER_SYSTEM, &user, SchemaId::PlayerData)?;
        match typed::<Doc>(&raw, SchemaId::PlayerData) {
            Ok(d) if d.player.health > 0 && d.player.attack > 0 => return Ok(d.player),
            Ok(d) => {
                last = format!(
                    "player needs positive health and attack, got {}/{}",
                    d.player.health, d.player.attack
                )
            }
            Err(e) => last = e,
        }
        user = with_feedback(&base, &last);
    }
    Err(PipelineError::Precondition(format!(
        "no usable player: {last}"
    )))
}

/// Problems that make generated entities unusable for `outgoing`.
fn integrity_problems(
    e: &LevelEntities,
    outgoing: &[OutgoingTrigger],
    ledger: &ContinuityLedger,
    node_idx: u32,
) -> Vec<String> {
    let mut out = Vec::new();
    let targets: BTreeSet<String> = outgoing.iter().map(|t| t.target.to_lowercase()).collect();
    for t in outgoing {
        match t.kind {
            TriggerKind::TalkTo if e.npc(&t.target).is_none() => {
                out.push(format!("missing NPC `{}` to talk to", t.target))
            }
            TriggerKind::PickUp => match e.item(&t.target) {
                None => out.push(format!("missing item `{}` to pick up", t.target)),
                Some(i) if !i.pickable => out.push(format!("item `{}` must be pickable", t.target)),
                _ => {}
            },
            TriggerKind::Defeat => match e.npc(&t.target) {
                None => out.push(format!("missing enemy `{}` to defeat", t.target)),
                Some(n) if n.friend => out.push(format!("`{}` must be hostile", t.target)),
                _ => {}
            },
            _ => {}
        }
        if !e.doors.iter().any(|d| d.idx == t.to) {
            out.push(format!("missing door to level {}", t.to));
        }
    }
    let next: BTreeSet<u32> = outgoing.iter().map(|t| t.to).collect();
    for d in &e.doors {
        if !next.contains(&d.idx) {
            out.push(format!("door to {} does not match any next level", d.idx));
        }
    }
    let mut names = BTreeSet::new();
    for name in e
        .npcs
        .iter()
        .map(|n| &n.name)
        .chain(e.items.iter().map(|i| &i.name))
    {
        if !names.insert(name.trim().to_lowercase()) {
            out.push(format!("duplicate entity name `{name}`"));
        }
    }
    for n in &e.npcs {
        if n.hp <= 0 || n.atk < 0 {
            out.push(format!("NPC `{}` needs hp > 0 and atk >= 0", n.name));
        }
        if let Some(d) = n.door {
            if !e.doors.iter().any(|door| door.idx == d) {
                out.push(format!("NPC `{}` guards missing door {d}", n.name));
            }
        }
    }
    for i in e.items.iter().filter(|i| i.pickable) {
        let key = i.name.trim().to_lowercase();
        let acquired_elsewhere = ledger
            .acquired_items
            .get(&key)
            .is_some_and(|&at| at != node_idx);
        if acquired_elsewhere && !targets.contains(&key) {
            out.push(format!(
                "`{}` was already acquired; do not offer it again",
                i.name
            ));
        }
    }
    out
}

/// Generates, scales and folds one level's entities into the chain state.
pub fn generate_entities(
    node: &StoryNode,
    state: &mut ChainState,
    backend: &dyn TextGenBackend,
) -> Result<LevelEntities, PipelineError> {
    let outgoing: Vec<OutgoingTrigger> = state
        .graph
        .outgoing(node.idx)
        .map(|e| OutgoingTrigger {
            to: e.to,
            kind: e.criteria.kind,
            target: e.criteria.target.clone(),
        })
        .collect();
    let ctx = EntityContext {
        node: NodeBrief {
            idx: node.idx,
            label: node.label,
            storyline: node.storyline.clone(),
            goal: node.goal.clone(),
            level_index: node.level_index,
        },
        outgoing: outgoing.clone(),
        player_name: state.player.name.clone(),
        acquired_items: state.ledger.acquired_items.keys().cloned().collect(),
        descriptors: state.ledger.descriptors.clone(),
        history: state.history.clone(),
    };
    let base = user_prompt(&entity_instructions(&ctx), &ctx);
    let mut user = base.clone();
    let mut problems = Vec::new();
    for _ in 0..=REPAIR_ATTEMPTS {
        let raw = backend.complete(ENTITY_SYSTEM, &user, SchemaId::LevelEntities)?;
        problems = match typed::<LevelEntities>(&raw, SchemaId::LevelEntities) {
            Ok(e) => {
                let p = integrity_problems(&e, &outgoing, &state.ledger, node.idx);
                if p.is_empty() {
                    return fold_entities(node, state, e);
                }
                p
            }
            Err(msg) => vec![msg],
        };
        user = with_feedback(&base, &problems.join("; "));
    }
    Err(PipelineError::EntityGen {
        level: node.idx,
        problems,
    })
}

fn fold_entities(
    node: &StoryNode,
    state: &mut ChainState,
    e: LevelEntities,
) -> Result<LevelEntities, PipelineError> {
    let e = match (state.options.difficulty_mode, node.label) {
        (DifficultyMode::Programmatic, Some(label)) => {
            apply_difficulty(&e, label, node.level_index, &state.options.difficulty)
        }
        _ => e,
    };
    let (ledger, report) = carry_over(&state.ledger, node.idx, node.level_index, &e)
        .map_err(|err| PipelineError::Precondition(err.to_string()))?;
    state.ledger = ledger;
    state.report.merge(report);
    state.history.push(node.storyline.clone());
    Ok(e)
}

/// Result of a finalize run. `report` holds continuity, spec and
/// traversability findings; the game spec is produced even when it is not ok.
#[derive(Debug, Clone, PartialEq)]
pub struct Finalized {
    pub graph: StoryGraph,
    pub spec: GameSpec,
    pub ledger: ContinuityLedger,
    pub report: ValidationReport,
}

/// Revision pass then entity pass over a validated graph.
pub fn finalize(
    graph: &StoryGraph,
    req: &GenerationRequest,
    backend: &dyn TextGenBackend,
    options: &FinalizeOptions,
) -> Result<Finalized, PipelineError> {
    options
        .difficulty
        .validate()
        .map_err(|e| PipelineError::Precondition(e.to_string()))?;
    let template = graph.arc.template();
    let gate = validate_graph_with(graph, &rules(template.as_ref(), req));
    if !gate.ok {
        return Err(PipelineError::FinalizeBlocked(gate));
    }

    let player = generate_player(req, backend)?;
    let (revised, truncated) = revise_all(graph, backend, req.storyline_word_cap)?;
    let mut state = ChainState {
        request: req.clone(),
        graph: revised,
        history: Vec::new(),
        ledger: ContinuityLedger::for_player(&player),
        player: player.clone(),
        options: options.clone(),
        report: ValidationReport::new(),
    };
    for idx in &truncated {
        state.report.note(format!(
            "storyline of node {idx} was truncated to {} words",
            req.storyline_word_cap
        ));
    }

    let order: Vec<StoryNode> = linearize(&state.graph).into_iter().cloned().collect();
    let mut levels = Vec::with_capacity(order.len());
    for node in &order {
        let entity = generate_entities(node, &mut state, backend)?;
        levels.push(Level {
            idx: node.idx,
            arc: node.label,
            storyline: node.storyline.clone(),
            goal: node.goal.clone(),
            next: state
                .graph
                .outgoing(node.idx)
                .map(|e| NextLevel {
                    idx: e.to,
                    criteria: e.criteria.clone(),
                })
                .collect(),
            entity,
        });
    }
    let spec = GameSpec {
        player_data: player,
        level_list: levels,
    };
    let mut report = state.report;
    report.merge(validate_spec(&spec, &state.graph));
    report.merge(check_traversability(&spec, &state.graph));
    Ok(Finalized {
        graph: state.graph,
        spec,
        ledger: state.ledger,
        report,
    })
}
