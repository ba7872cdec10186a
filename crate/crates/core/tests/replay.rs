//! Each stage's persisted output is enough to rerun the next stage alone.

mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use par_core::gateway::{extract_code, CandidateProgram, ExtractionMethod, MockProvider};
use par_core::judge::{judge_candidate, majority_vote, Verdict};
use par_core::pipeline::{load_outcomes, prepare_prompts, read_json, run_repair, PipelineConfig, Workspace};
use par_core::similarity::{PassVector, PeerSelection};
use tempfile::TempDir;

use common::toy_config;

struct Fixture {
    out: TempDir,
    cfg: PipelineConfig,
    ws: Workspace,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let out = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig { out: out.path().to_path_buf(), ..toy_config() };
        let ws = Workspace::open(&cfg).unwrap();
        let run = run_repair(&cfg, &ws, &MockProvider::new(&cfg.mock_dir)).unwrap();
        run.write(&cfg.out).unwrap();
        Fixture { out, cfg, ws }
    })
}

fn sample_dirs(f: &Fixture) -> Vec<(String, std::path::PathBuf)> {
    let mut out = Vec::new();
    for id in f.ws.corpus.submissions.keys() {
        for k in 0..f.cfg.llm.samples_per_prompt {
            out.push((id.clone(), f.out.path().join("submissions").join(id).join(k.to_string())));
        }
    }
    out
}

#[test]
fn prompts_replay_from_pass_vectors() {
    let f = fixture();
    let pv: BTreeMap<String, PassVector> = read_json(&f.out.path().join("pass_vectors.json")).unwrap();
    let (_, prompts) = prepare_prompts(&f.cfg, &f.ws, Some(pv)).unwrap();
    for (id, p) in prompts {
        let dir = f.out.path().join("submissions").join(&id);
        let saved = std::fs::read_to_string(dir.join("prompt.txt")).unwrap();
        assert_eq!(p.prompt.unwrap().rendered, saved, "{id}");
        let selection: PeerSelection = read_json(&dir.join("selection.json")).unwrap();
        assert_eq!(p.selection.unwrap(), selection, "{id}");
    }
}

#[test]
fn candidates_replay_from_responses() {
    let f = fixture();
    for (id, dir) in sample_dirs(f) {
        let Ok(response) = std::fs::read_to_string(dir.join("response.txt")) else {
            assert!(!dir.join("candidate.c").exists(), "{id}");
            continue;
        };
        match extract_code(&response) {
            Ok(c) => {
                assert_eq!(c.source, std::fs::read_to_string(dir.join("candidate.c")).unwrap(), "{}", dir.display())
            }
            Err(_) => assert!(!dir.join("candidate.c").exists(), "{}", dir.display()),
        }
    }
}

#[test]
fn verdicts_replay_from_candidates() {
    let f = fixture();
    let pv: BTreeMap<String, PassVector> = read_json(&f.out.path().join("pass_vectors.json")).unwrap();
    for (id, dir) in sample_dirs(f) {
        let s = &f.ws.corpus.submissions[&id];
        let assignment = &f.ws.corpus.assignments[&s.assignment_id];
        let candidate = std::fs::read_to_string(dir.join("candidate.c"))
            .ok()
            .map(|source| CandidateProgram { source, extraction_method: ExtractionMethod::FencedBlock });
        let verdict =
            judge_candidate(candidate.as_ref(), assignment, &pv[&id], &f.cfg.limits, &f.cfg.compiler, None).unwrap();
        let saved: Verdict = read_json(&dir.join("verdict.json")).unwrap();
        assert_eq!(verdict.classification, saved.classification, "{}", dir.display());
        assert_eq!(verdict.pass_vector, saved.pass_vector, "{}", dir.display());
    }
}

#[test]
fn outcomes_replay_from_verdicts() {
    let f = fixture();
    let replayed = load_outcomes(f.out.path()).unwrap();
    let saved: BTreeMap<String, par_core::judge::ProgramOutcome> =
        read_json(&f.out.path().join("outcomes.json")).unwrap();
    assert_eq!(replayed, saved);
    for outcome in saved.values() {
        let again = majority_vote(outcome.verdicts.clone()).unwrap();
        assert_eq!((again.fixed, again.partial), (outcome.fixed, outcome.partial));
    }
}
