//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line each;
//! exits non-zero if any fails.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ems_core::agents::{
    AgentBackend, AgentPool, HttpAgent, HttpAgentConfig, TraceRecord, TraceTable,
};
use ems_core::confidence::{
    historical_reliability, rank_agents, semantic_reliability, ScoringConfig, ScoringStrategy,
};
use ems_core::domain::{AgentConfidence, AgentId};
use ems_core::embedding::{HashingEncoder, DEFAULT_DIM};
use ems_core::harness::synthetic::{heterogeneous_profiles, synthetic_dataset, unanimous_profiles};
use ems_core::harness::{
    oracle_check, run_experiment, simulated_pool, write_audit, ExperimentRun, ExperimentSettings,
    Strategy,
};
use ems_core::icu::apply_icu;
use ems_core::voting::{majority_threshold, run_session, DispatchConfig, VoteSession};
use ems_core::{Answer, AnswerMode, GlobalState, Query, StopReason, Vote};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 decision equivalence", c1_decision_equivalence),
        ("2 quorum threshold and bounds", c2_quorum_bounds),
        ("3 stop-index minimality", c3_stop_minimality),
        ("4 invocation savings", c4_invocation_savings),
        ("5 fixed-k accuracy gap", c5_fixed_k_gap),
        ("6 icu correctness", c6_icu),
        ("7 determinism", c7_determinism),
        ("8 scoring", c8_scoring),
        ("9 http backend contract", c9_http_backend),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({secs:.1}s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {name}: {reason} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "<non-string panic>".into())
}

fn simulate(
    queries: &[Query],
    seed: u64,
    strategies: &[Strategy],
    parallel: usize,
) -> (ExperimentRun, Vec<TraceRecord>) {
    let (pool, records) =
        simulated_pool(&heterogeneous_profiles(), queries, seed, AnswerMode::Text).unwrap();
    let settings = ExperimentSettings {
        seed,
        strategies: strategies.to_vec(),
        parallel,
        ..ExperimentSettings::default()
    };
    let run = run_experiment(
        &settings,
        queries,
        &pool,
        &HashingEncoder::new(DEFAULT_DIM),
        None,
    )
    .unwrap();
    (run, records)
}

fn c1_decision_equivalence() -> Outcome {
    let started = Instant::now();
    let queries = synthetic_dataset(10_000, 11);
    let strategies = [
        Strategy::SimpleMV,
        Strategy::RandomES,
        Strategy::EmsRel,
        Strategy::EmsSim,
    ];
    let (run, records) = simulate(&queries, 11, &strategies, 1);
    let elapsed = started.elapsed();

    let answers = |s: Strategy| -> Vec<Option<String>> {
        run.report
            .strategy(s)
            .unwrap()
            .per_query
            .iter()
            .map(|r| r.final_answer.clone())
            .collect()
    };
    let reference = answers(Strategy::SimpleMV);
    for s in &strategies[1..] {
        let diff = answers(*s)
            .iter()
            .zip(&reference)
            .filter(|(a, b)| a != b)
            .count();
        ensure!(diff == 0, "{s} differs from simple-mv on {diff} queries");
    }
    let table = TraceTable::from_records(records).unwrap();
    let verdict = oracle_check(&table, &run.report, AnswerMode::Text).unwrap();
    ensure!(
        verdict.passed(),
        "{} oracle mismatches, first {:?}",
        verdict.mismatches.len(),
        verdict.mismatches[0]
    );
    ensure!(
        elapsed < Duration::from_secs(60),
        "took {:.1}s",
        elapsed.as_secs_f64()
    );
    Ok(format!(
        "10000 queries x 4 strategies identical, {} oracle checks, 0 mismatches, run {:.1}s",
        verdict.checked,
        elapsed.as_secs_f64()
    ))
}

fn c2_quorum_bounds() -> Outcome {
    for n in 1..=101usize {
        let expected = ((n as f64 + 1.0) / 2.0).ceil() as usize;
        let tau = majority_threshold(n).map_err(|e| e.to_string())?;
        ensure!(tau == expected, "tau({n}) = {tau}, expected {expected}");
    }

    let queries = synthetic_dataset(2_000, 21);
    let strategies = [Strategy::RandomES, Strategy::EmsRel, Strategy::EmsSim];
    let (run, _) = simulate(&queries, 21, &strategies, 1);
    let mut sessions = 0;
    for s in &run.report.strategies {
        for r in &s.per_query {
            sessions += 1;
            ensure!(
                (5..=9).contains(&r.invoked_count),
                "{} {}: invoked {}",
                s.strategy,
                r.query_id,
                r.invoked_count
            );
            if r.stop_reason == StopReason::PluralityFallback {
                ensure!(
                    r.invoked_count == 9,
                    "fallback before exhausting the pool on {}",
                    r.query_id
                );
            }
        }
    }

    for n in [1usize, 2, 3, 8, 9, 15] {
        let queries = synthetic_dataset(200, 5);
        let (pool, _) =
            simulated_pool(&unanimous_profiles(n), &queries, 5, AnswerMode::Text).unwrap();
        let settings = ExperimentSettings {
            strategies: vec![Strategy::RandomES, Strategy::EmsRel, Strategy::EmsSim],
            ..ExperimentSettings::default()
        };
        let run = run_experiment(
            &settings,
            &queries,
            &pool,
            &HashingEncoder::new(DEFAULT_DIM),
            None,
        )
        .map_err(|e| e.to_string())?;
        let tau = n / 2 + 1;
        for s in &run.report.strategies {
            ensure!(
                s.per_query
                    .iter()
                    .all(|r| r.invoked_count == tau && r.stop_reason == StopReason::QuorumReached),
                "unanimous pool of {n}: {} did not stop at {tau}",
                s.strategy
            );
        }
    }
    Ok(format!(
        "tau(1..=101) exact, {sessions} sessions within [5, 9], unanimous N=9 stops at 5"
    ))
}

/// Smallest prefix at which some answer has `tau` votes; independent of the engine.
fn minimal_stop(seq: &[Option<u8>], tau: usize) -> Option<usize> {
    let mut counts = [0usize; 256];
    for (i, v) in seq.iter().enumerate() {
        if let Some(a) = v {
            counts[*a as usize] += 1;
            if counts[*a as usize] >= tau {
                return Some(i + 1);
            }
        }
    }
    None
}

fn c3_stop_minimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fallbacks = 0;
    for case in 0..10_000 {
        let n = rng.gen_range(1..=15usize);
        let alphabet = rng.gen_range(1..=4u8);
        let abstain_rate = if rng.gen_bool(0.3) { 0.2 } else { 0.0 };
        let seq: Vec<Option<u8>> = (0..n)
            .map(|_| (!rng.gen_bool(abstain_rate)).then(|| rng.gen_range(0..alphabet)))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);

        let ids: Vec<AgentId> = (0..n).map(AgentId::anonymous).collect();
        let mut session = VoteSession::new(format!("case-{case}"), ids, order.clone())
            .map_err(|e| e.to_string())?;
        let mut position = 0;
        while let Some(agent) = session.next_agent() {
            ensure!(
                agent == order[position],
                "case {case}: engine skipped rank {position}"
            );
            let vote = match seq[position] {
                Some(a) => Vote::Answer(Answer::text(format!("ans-{a}"))),
                None => Vote::Abstain,
            };
            session
                .submit_vote(agent, vote)
                .map_err(|e| e.to_string())?;
            position += 1;
        }
        let outcome = session.into_outcome().map_err(|e| e.to_string())?;
        let tau = n / 2 + 1;
        match minimal_stop(&seq, tau) {
            Some(stop) => {
                ensure!(
                    outcome.invoked_count() == stop,
                    "case {case}: invoked {} vs minimal {stop}",
                    outcome.invoked_count()
                );
                ensure!(
                    outcome.stop_reason == StopReason::QuorumReached,
                    "case {case}: wrong stop reason"
                );
            }
            None => {
                fallbacks += 1;
                ensure!(
                    outcome.invoked_count() == n,
                    "case {case}: fallback after {} of {n}",
                    outcome.invoked_count()
                );
            }
        }
    }
    Ok(format!(
        "10000 sequences, invoked = brute-force minimum ({fallbacks} fallbacks)"
    ))
}

const SEEDS: [u64; 5] = [101, 202, 303, 404, 505];

fn c4_invocation_savings() -> Outcome {
    let mut ems = Vec::new();
    let mut random = Vec::new();
    for seed in SEEDS {
        let queries = synthetic_dataset(2_000, seed);
        let (run, _) = simulate(&queries, seed, &[Strategy::RandomES, Strategy::EmsRel], 1);
        ems.push(
            run.report
                .strategy(Strategy::EmsRel)
                .unwrap()
                .metrics
                .avg_agents,
        );
        random.push(
            run.report
                .strategy(Strategy::RandomES)
                .unwrap()
                .metrics
                .avg_agents,
        );
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (ems, random) = (mean(&ems), mean(&random));
    let reduction = 1.0 - ems / 9.0;
    ensure!(ems <= random, "ems-rel {ems:.3} > random-es {random:.3}");
    ensure!(random < 9.0, "random-es saved nothing");
    ensure!(
        (0.10..=0.45).contains(&reduction),
        "reduction {:.1}% outside [10%, 45%]",
        reduction * 100.0
    );
    Ok(format!(
        "avg agents ems-rel {ems:.3} <= random-es {random:.3} < 9, reduction {:.1}% over {} seeds",
        reduction * 100.0,
        SEEDS.len()
    ))
}

fn c5_fixed_k_gap() -> Outcome {
    let mut gaps = Vec::new();
    for seed in SEEDS {
        let queries = synthetic_dataset(2_000, seed);
        let (run, _) = simulate(
            &queries,
            seed,
            &[Strategy::SimpleMV, Strategy::FixedRandomK(5)],
            1,
        );
        let acc = |s| run.report.strategy(s).unwrap().metrics.accuracy.unwrap();
        gaps.push(acc(Strategy::SimpleMV) - acc(Strategy::FixedRandomK(5)));
    }
    let gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    ensure!(
        gap >= 0.005,
        "mean accuracy gap {:.2} pp < 0.5 pp",
        gap * 100.0
    );
    Ok(format!(
        "simple-mv beats fixed-random-5 by {:.2} pp on average over {} seeds",
        gap * 100.0,
        SEEDS.len()
    ))
}

fn c6_icu() -> Outcome {
    // Step through the protocol by hand with a small buffer to force eviction.
    let capacity = 16;
    let queries = synthetic_dataset(1_500, 61);
    let (pool, _) =
        simulated_pool(&heterogeneous_profiles(), &queries, 61, AnswerMode::Text).unwrap();
    let encoder = HashingEncoder::new(DEFAULT_DIM);
    let cfg = ScoringConfig::default();
    for scoring in [ScoringStrategy::Historical, ScoringStrategy::Semantic] {
        let mut state = GlobalState::fresh(pool.ids(), capacity, DEFAULT_DIM);
        let mut invocations = 0u64;
        for q in &queries {
            let qvec = encoder.encode(&q.text);
            let order = rank_agents(&qvec, &state, scoring, &cfg)
                .unwrap()
                .into_order();
            let outcome = run_session(q, &order, &pool, &DispatchConfig::default()).unwrap();
            invocations += outcome.invoked_count() as u64;
            let before = state.clone();
            apply_icu(&mut state, &outcome, &qvec).unwrap();
            let invoked: Vec<usize> = outcome.invoked().map(|id| id.index).collect();
            for (i, (old, new)) in before.agents.iter().zip(&state.agents).enumerate() {
                ensure!(new.agreed <= new.participated, "{scoring}: agent {i} c > v");
                ensure!(
                    new.buffer.len() <= capacity,
                    "{scoring}: agent {i} buffer over capacity"
                );
                if !invoked.contains(&i) {
                    ensure!(
                        old == new,
                        "{scoring}: non-invoked agent {i} changed on {}",
                        q.id
                    );
                    ensure!(
                        old.buffer.iter().zip(&new.buffer).all(|(a, b)| a
                            .values()
                            .iter()
                            .zip(b.values())
                            .all(|(x, y)| x.to_bits() == y.to_bits())),
                        "{scoring}: buffer bits changed for agent {i}"
                    );
                } else {
                    ensure!(
                        new.participated == old.participated + 1,
                        "{scoring}: agent {i} v not incremented"
                    );
                }
            }
        }
        ensure!(
            state.total_participation() == invocations,
            "{scoring}: sum v {} != invocations {invocations}",
            state.total_participation()
        );
    }

    // Through the harness: sum of v must equal the audit log's invocations.
    let settings = ExperimentSettings {
        seed: 61,
        strategies: vec![
            Strategy::WeightedMV,
            Strategy::FixedTopK(5),
            Strategy::EmsRel,
            Strategy::EmsSim,
        ],
        buffer_capacity: capacity,
        ..ExperimentSettings::default()
    };
    let run = run_experiment(&settings, &queries, &pool, &encoder, None).unwrap();
    for (strategy, state) in &run.final_states {
        let logged = run.audit.iter().filter(|a| a.strategy == *strategy).count() as u64;
        ensure!(
            state.total_participation() == logged,
            "{strategy}: sum v {} != audit {logged}",
            state.total_participation()
        );
        ensure!(
            state
                .agents
                .iter()
                .all(|a| a.agreed <= a.participated && a.buffer.len() <= capacity),
            "{strategy}: invariant broken"
        );
    }
    Ok(format!(
        "c <= v, untouched agents bit-identical, buffers <= {capacity}, sum v = audit log for {} strategies",
        run.final_states.len()
    ))
}

fn c7_determinism() -> Outcome {
    let queries = synthetic_dataset(1_000, 71);
    let strategies = Strategy::ALL_DEFAULT.to_vec();
    let render = |parallel: usize| {
        let (run, _) = simulate(&queries, 71, &strategies, parallel);
        let mut audit = Vec::new();
        write_audit(&mut audit, &run.audit).unwrap();
        (run.report.to_json(), audit)
    };
    let first = render(1);
    ensure!(first == render(1), "two sequential runs differ");
    ensure!(
        first == render(4),
        "parallel run differs from sequential run"
    );
    ensure!(
        first == render(16),
        "wide parallel run differs from sequential run"
    );
    Ok(format!(
        "report ({} bytes) and audit ({} bytes) identical across 4 runs, parallel 1/4/16",
        first.0.len(),
        first.1.len()
    ))
}

fn agent(c: u64, v: u64) -> AgentConfidence {
    let mut a = AgentConfidence::fresh(AgentId::anonymous(0));
    a.agreed = c;
    a.participated = v;
    a
}

fn c8_scoring() -> Outcome {
    let cfg = ScoringConfig::default();
    ensure!(
        historical_reliability(&agent(0, 0), &cfg).value == 0.5,
        "cold start is not 0.5"
    );
    ensure!(
        historical_reliability(&agent(7, 10), &cfg).value == 0.7,
        "7/10 != 0.7"
    );
    let laplace = ScoringConfig {
        laplace: true,
        ..cfg
    };
    ensure!(
        historical_reliability(&agent(0, 0), &laplace).value == 0.5,
        "laplace cold start"
    );
    ensure!(
        (historical_reliability(&agent(3, 4), &laplace).value - 4.0 / 6.0).abs() < 1e-12,
        "laplace 3/4"
    );

    let encoder = HashingEncoder::new(DEFAULT_DIM);
    let q = encoder.encode("solve the quadratic equation");
    let empty = agent(0, 0);
    ensure!(
        semantic_reliability(&q, &empty, &cfg).unwrap().value == 0.5,
        "empty buffer is not neutral"
    );
    let mut same = agent(1, 1);
    same.remember(q.clone(), 128);
    ensure!(
        (semantic_reliability(&q, &same, &cfg).unwrap().value - 1.0).abs() < 1e-12,
        "self similarity != 1"
    );

    let mut state = GlobalState::fresh((0..3).map(AgentId::anonymous), 128, DEFAULT_DIM);
    for (a, (c, v)) in state.agents.iter_mut().zip([(9, 10), (5, 10), (10, 10)]) {
        a.agreed = c;
        a.participated = v;
    }
    let order = rank_agents(&q, &state, ScoringStrategy::Historical, &cfg)
        .unwrap()
        .into_order();
    ensure!(order == vec![2, 0, 1], "historical ranking {order:?}");
    let cold = GlobalState::fresh((0..5).map(AgentId::anonymous), 128, DEFAULT_DIM);
    for s in [ScoringStrategy::Historical, ScoringStrategy::Semantic] {
        let order = rank_agents(&q, &cold, s, &cfg).unwrap().into_order();
        ensure!(
            order == vec![0, 1, 2, 3, 4],
            "{s}: cold ties not by index: {order:?}"
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let texts = [
        "solve for x",
        "angle of a triangle",
        "treaty of the empire",
        "acid reaction",
        "cell membrane",
    ];
    for _ in 0..1_000 {
        let n = rng.gen_range(1..=12usize);
        let mut state = GlobalState::fresh((0..n).map(AgentId::anonymous), 8, DEFAULT_DIM);
        for a in &mut state.agents {
            a.participated = rng.gen_range(0..50);
            a.agreed = rng.gen_range(0..=a.participated);
            for _ in 0..rng.gen_range(0..4) {
                a.remember(encoder.encode(texts[rng.gen_range(0..texts.len())]), 8);
            }
        }
        let q = encoder.encode(texts[rng.gen_range(0..texts.len())]);
        for s in [ScoringStrategy::Historical, ScoringStrategy::Semantic] {
            let ranking = rank_agents(&q, &state, s, &cfg).unwrap();
            let mut sorted = ranking.order().to_vec();
            sorted.sort_unstable();
            ensure!(
                sorted == (0..n).collect::<Vec<_>>(),
                "{s}: not a permutation"
            );
            // Recompute every score from scratch and check it against its rank.
            let expected: Vec<f64> = state
                .agents
                .iter()
                .map(|a| match s {
                    ScoringStrategy::Historical => historical_reliability(a, &cfg).value,
                    ScoringStrategy::Semantic => semantic_reliability(&q, a, &cfg).unwrap().value,
                })
                .collect();
            for (k, &i) in ranking.order().iter().enumerate() {
                ensure!(
                    ranking.scores()[k].value == expected[i],
                    "{s}: score of rank {k} is not agent {i}'s"
                );
            }
            let scores: Vec<f64> = ranking.order().iter().map(|&i| expected[i]).collect();
            ensure!(
                scores.windows(2).all(|w| w[0] >= w[1]),
                "{s}: scores increase along the ranking"
            );
            let bounds = if s == ScoringStrategy::Historical {
                0.0..=1.0
            } else {
                -1.0..=1.0
            };
            ensure!(
                scores.iter().all(|x| bounds.contains(x)),
                "{s}: score out of range"
            );
            for w in ranking.order().windows(2) {
                if expected[w[0]] == expected[w[1]] {
                    ensure!(w[0] < w[1], "{s}: tie not broken by index");
                }
            }
        }
    }
    Ok("unit checks pass, 1000 random states rank as stable descending permutations".into())
}

fn http_agent(index: usize, url: String, timeout_ms: u64) -> Box<dyn AgentBackend> {
    let mut cfg = HttpAgentConfig::new(format!("http-{index}"), url, "stub-model");
    cfg.timeout_ms = timeout_ms;
    Box::new(HttpAgent::new(index, cfg, AnswerMode::Text).unwrap())
}

fn c9_http_backend() -> Outcome {
    let server = support::StubServer::start();
    let query = Query {
        id: "h1".into(),
        text: "What is 6 times 7?".into(),
        gold: None,
        topic: None,
    };

    let ok = http_agent(0, server.url("/answer/42"), 1_000);
    let vote = ok.invoke(&query).map_err(|e| e.to_string())?;
    ensure!(
        vote == Vote::Answer(Answer::text("42")),
        "extracted {vote:?}"
    );
    let (_, body, _) = server
        .requests()
        .into_iter()
        .find(|(p, _, _)| p == "/answer/42")
        .unwrap();
    ensure!(
        body["model"] == "stub-model" && body["temperature"] == 0,
        "request body {body}"
    );
    ensure!(body["messages"][0]["role"] == "user", "request body {body}");
    ensure!(
        body["messages"][0]["content"]
            .as_str()
            .unwrap_or("")
            .contains("What is 6 times 7?"),
        "prompt lacks query"
    );

    let mut slow_cfg = HttpAgentConfig::new("slow", server.url("/slow"), "stub-model");
    slow_cfg.timeout_ms = 200;
    slow_cfg.retries = 2;
    let slow = HttpAgent::new(0, slow_cfg, AnswerMode::Text).unwrap();
    let started = Instant::now();
    ensure!(slow.invoke(&query).is_err(), "timeout did not fail");
    ensure!(
        started.elapsed() < Duration::from_millis(1_900),
        "timeout not enforced"
    );
    std::thread::sleep(Duration::from_millis(50));
    ensure!(
        server.hits_for("/slow") == 3,
        "expected 1+2 attempts, saw {}",
        server.hits_for("/slow")
    );

    let pool = AgentPool::new(vec![Box::new(slow) as Box<dyn AgentBackend>]).unwrap();
    ensure!(
        pool.invoke(0, &query) == Vote::Abstain,
        "timeout did not map to abstain"
    );

    let noanswer = http_agent(0, server.url("/noanswer"), 1_000);
    ensure!(
        noanswer.invoke(&query).is_err(),
        "reply without marker accepted"
    );
    let error = http_agent(0, server.url("/error"), 1_000);
    ensure!(error.invoke(&query).is_err(), "500 accepted");
    ensure!(
        server.hits_for("/error") == 3,
        "500 retried {} times",
        server.hits_for("/error")
    );

    // Five agents; the top-ranked one times out.
    let mut backends = vec![http_agent(0, server.url("/slow"), 200)];
    for i in 1..5 {
        backends.push(http_agent(i, server.url("/answer/42"), 1_000));
    }
    let pool = AgentPool::new(backends).unwrap();
    let outcome = run_session(
        &query,
        &[0, 1, 2, 3, 4],
        &pool,
        &DispatchConfig {
            concurrent_initial: true,
            prune_impossible: false,
        },
    )
    .map_err(|e| e.to_string())?;
    let tau = 3;
    ensure!(
        outcome.votes[0].1 == Vote::Abstain,
        "first agent did not abstain"
    );
    ensure!(
        (tau..=5).contains(&outcome.invoked_count()),
        "invoked {}",
        outcome.invoked_count()
    );
    ensure!(
        outcome.invoked_count() == 4,
        "expected stop after 4, got {}",
        outcome.invoked_count()
    );
    ensure!(
        outcome.final_answer.as_ref().map(Answer::as_str) == Some("42"),
        "final {:?}",
        outcome.final_answer
    );

    let mut state = GlobalState::fresh(pool.ids(), 8, DEFAULT_DIM);
    apply_icu(
        &mut state,
        &outcome,
        &HashingEncoder::new(DEFAULT_DIM).encode(&query.text),
    )
    .unwrap();
    ensure!(
        state.agents[0].participated == 1 && state.agents[0].agreed == 0,
        "abstainer credited"
    );

    Ok("answer extracted, timeout -> abstain after 1+2 attempts, session with abstainer stops at 4 of 5".into())
}
