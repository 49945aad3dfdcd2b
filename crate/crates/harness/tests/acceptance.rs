//! Acceptance suite. One PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p ctf-harness --test acceptance`. Pass criterion
//! numbers as arguments to run a subset. The process fails when a criterion
//! outside `KNOWN_UNATTAINED` fails.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use ctf_core::agents::{composite_potential, AttHConfig, OpponentSpec};
use ctf_core::engine::{
    detect_events, reference_events, reset_round, Action, EventKind, FieldConfig, GameEvent, GameState, Role,
};
use ctf_core::env::{CtfEnv, EnvConfig};
use ctf_core::episode_log::EpisodeLog;
use ctf_core::geometry::Vec2;
use ctf_core::learning::{
    evaluate, run_curriculum, run_interleaved, train, value_iteration, CurriculumStage, EvalReport, FiniteMdp,
    LearningSetup, PolicySnapshot, TrainConfig,
};
use ctf_core::rewards::{eval_potential, scale_gradient, sparse_reward, RewardSpec, ShapingConstants};
use ctf_envserver::{Client, ProtocolMessage, Server};
use ctf_harness::heatmap::action_heatmap;
use ctf_harness::parse_config;
use ctf_harness::replay::cmd_replay;
use ctf_harness::run::cmd_train;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail with the shipped defaults. The analysis lives in the
/// project's decision notes; each is still run and reported.
const KNOWN_UNATTAINED: &[u32] = &[6, 7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let checks: [(u32, &str, Check); 11] = [
        (1, "event detection matches reference", c1_events),
        (2, "log scores equal per-step points", c2_scores),
        (3, "sparse reward values", c3_sparse),
        (4, "shaping potentials closed form", c4_shaping),
        (5, "potential shaping keeps greedy policies", c5_invariance),
        (6, "BTRS beats SR against att_e", c6_btrs),
        (7, "EFF doubles the hold fraction", c7_eff),
        (8, "regimes agree on a single opponent", c8_regimes),
        (9, "wire episodes equal in-process episodes", c9_wire),
        (10, "train is byte-reproducible and replays clean", c10_reproducible),
        (11, "att_h gradient matches finite differences", c11_gradient),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (n, name, check) in checks {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_UNATTAINED.contains(&n);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as unattained)",
            (false, true) => "FAIL (known, unattained)",
            (false, false) => "FAIL",
        };
        println!("criterion {n:>2}: {tag} - {name} [{secs:.1}s] {}", o.detail);
        if !o.pass && !known {
            unexpected.push(n);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}

fn anywhere(rng: &mut ChaCha8Rng, f: &FieldConfig<f64>) -> Vec2<f64> {
    Vec2::new(rng.gen_range(-5.0..f.width + 5.0), rng.gen_range(-5.0..f.depth + 5.0))
}

fn near(rng: &mut ChaCha8Rng, c: Vec2<f64>, r: f64) -> Vec2<f64> {
    let a = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let d = r * rng.gen::<f64>().sqrt();
    c + Vec2::new(d * a.cos(), d * a.sin())
}

fn random_pair(rng: &mut ChaCha8Rng, f: &FieldConfig<f64>) -> (GameState<f64>, GameState<f64>) {
    let mut before = reset_round(f, rng.gen()).unwrap();
    before.flag_grabbed = rng.gen_bool(0.5);
    let att_ret = rng.gen_bool(0.2);
    before.attacker.has_flag = before.flag_grabbed && !att_ret;
    before.attacker.returning_to_base = att_ret;
    before.defender.returning_to_base = rng.gen_bool(0.2);
    let att = match rng.gen_range(0..4) {
        0 => near(rng, f.defender_flag, 3.0 * f.grab_range),
        1 => near(rng, f.attacker_base, 2.0 * f.base_radius),
        _ => anywhere(rng, f),
    };
    let def = if rng.gen_bool(0.6) { near(rng, att, 1.5 * f.tag_range) } else { anywhere(rng, f) };
    let mut after = before.clone();
    after.attacker.position = att;
    after.defender.position = def;
    after.step_count = 1;
    (before, after)
}

fn c1_events() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fields = [FieldConfig::full(), FieldConfig::reduced()];
    let mut seen: BTreeMap<EventKind, u64> = BTreeMap::new();
    let mut bad = 0;
    let n = 100_000;
    for i in 0..n {
        let f = &fields[i % 2];
        let (before, after) = random_pair(&mut rng, f);
        let got: Vec<EventKind> = detect_events(&before, &after, f).iter().map(|e| e.kind).collect();
        if got != reference_events(&before, &after, f) {
            bad += 1;
        }
        for k in got {
            *seen.entry(k).or_default() += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let kinds: Vec<String> = seen.iter().map(|(k, c)| format!("{k}={c}")).collect();
    outcome(
        bad == 0 && secs < 30.0 && seen.len() == EventKind::ALL.len(),
        format!("{n} pairs, {bad} disagreements, {secs:.2}s; {}", kinds.join(" ")),
    )
}

fn c2_scores() -> Outcome {
    let mut bad = Vec::new();
    let mut scoring = 0;
    for i in 0..1000u64 {
        let field = if i % 2 == 0 { FieldConfig::reduced() } else { FieldConfig::full() };
        let opponent = if i % 4 < 2 { OpponentSpec::att_e() } else { OpponentSpec::att_h(&field) };
        let mut env = CtfEnv::new(EnvConfig {
            opponent,
            reward: RewardSpec::named("BTRS+EFF", &field).unwrap(),
            field,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let mut a = Action::new(rng.gen_range(0..4), rng.gen_range(0..8));
        let result = env
            .run_episode(i, true, |_, _| {
                if rng.gen_bool(0.2) {
                    a = Action::new(rng.gen_range(0..4), rng.gen_range(0..8));
                }
                a
            })
            .unwrap();
        let log = result.log.unwrap();
        let back = EpisodeLog::<f64>::read_jsonl(log.to_jsonl_string().as_bytes()).unwrap();
        let ok = [Role::Attacker, Role::Defender].iter().all(|r| {
            log.score(*r) == log.per_step_points(*r) && back.score(*r) == back.per_step_points(*r)
        }) && back == log
            && result.score == log.score(Role::Defender);
        if !ok {
            bad.push(i);
        }
        scoring += u64::from(log.score(Role::Defender) != 0);
    }
    outcome(bad.is_empty(), format!("1000 logs ({scoring} with nonzero score), failing: {bad:?}"))
}

fn c3_sparse() -> Outcome {
    let event = |kind| GameEvent {
        kind,
        step: 1,
        attacker_position: Vec2::new(0.0, 0.0),
        defender_position: Vec2::new(0.0, 0.0),
    };
    use EventKind::*;
    let expected = [
        (Role::Defender, Tag, 100.0),
        (Role::Defender, RetrievalTag, 50.0),
        (Role::Defender, Grab, -50.0),
        (Role::Defender, Capture, -100.0),
        (Role::Defender, OutOfBoundsDefender, -100.0),
        (Role::Attacker, Grab, 50.0),
        (Role::Attacker, Capture, 100.0),
    ];
    let c_ext = RewardSpec::<f64>::named("SR", &FieldConfig::full()).unwrap().c_ext;
    let wrong: Vec<String> = expected
        .iter()
        .filter_map(|(role, kind, want)| {
            let got = sparse_reward(&[event(*kind)], *role, c_ext);
            (got != *want).then(|| format!("{role:?}/{kind}: {got} != {want}"))
        })
        .collect();
    outcome(wrong.is_empty(), format!("{} values checked {}", expected.len(), wrong.join("; ")))
}

/// Hand-written band formulas at threat 20 m, warn 40 m, tag 10 m.
fn hand_boundary(c: &ShapingConstants, d: f64) -> f64 {
    let [i1, s1, i3, s3] = c.boundary;
    if d < 20.0 {
        i3 + s3 * d
    } else if d < 40.0 {
        i1 + s1 * d
    } else {
        0.0
    }
}

fn hand_tag(c: &ShapingConstants, d: f64) -> f64 {
    let [i1, s1, i3, s3] = c.tag;
    if d < 10.0 {
        0.0
    } else if d < 20.0 {
        i3 + s3 * d
    } else if d < 40.0 {
        i1 + s1 * d
    } else {
        0.0
    }
}

fn c4_shaping() -> Outcome {
    let field = FieldConfig::<f64>::full();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ds: Vec<f64> = vec![0.0, 10.0, 20.0, 40.0];
    ds.extend((0..96).map(|_| rng.gen_range(0.0..50.0)));
    let mut worst = 0.0f64;
    for c in [ShapingConstants::PPO, ShapingConstants::DQN] {
        let bp = c.boundary_potential(&field);
        let tp = c.tag_potential(&field);
        for &d in &ds {
            worst = worst
                .max((eval_potential(&bp, d) - hand_boundary(&c, d)).abs())
                .max((eval_potential(&tp, d) - hand_tag(&c, d)).abs());
        }
    }
    // The band values quoted for the default calibration.
    let ppo = ShapingConstants::PPO.boundary_potential(&field);
    let quoted = [(0.0, -0.375), (10.0, -0.25), (50.0, 0.0)];
    let quoted_ok = quoted.iter().all(|(d, v)| (ppo.eval(*d) - v).abs() < 1e-12);

    let base = RewardSpec::<f64>::named("BTRS", &field).unwrap();
    let twice = scale_gradient(&base, 2.0).unwrap();
    let doubled = |a: &ctf_core::rewards::PiecewiseLinearPotential<f64>,
                   b: &ctf_core::rewards::PiecewiseLinearPotential<f64>| {
        a.bands().len() == b.bands().len()
            && a.bands().iter().zip(b.bands()).all(|(x, y)| y.slope == 2.0 * x.slope && y.intercept == x.intercept)
    };
    let scaled_ok = doubled(&base.scaled_boundary_potential(), &twice.scaled_boundary_potential())
        && doubled(&base.scaled_tag_potential(), &twice.scaled_tag_potential())
        && twice.scaled_boundary_potential().slopes() == vec![0.025, 0.05625];
    outcome(
        worst <= 1e-12 && quoted_ok && scaled_ok,
        format!("{} distances x 2 constant sets, max error {worst:e}, 2x slopes exact: {scaled_ok}", ds.len()),
    )
}

fn random_mdp(rng: &mut ChaCha8Rng) -> (FiniteMdp<f64>, Vec<f64>) {
    let ns = rng.gen_range(1..=12);
    let na = rng.gen_range(1..=4);
    let mut t = Vec::with_capacity(ns * na * ns);
    for _ in 0..ns * na {
        let raw: Vec<f64> = (0..ns).map(|_| if rng.gen_bool(0.6) { rng.gen::<f64>() } else { 0.0 }).collect();
        let total: f64 = raw.iter().sum();
        let mut row = vec![0.0; ns];
        if total == 0.0 {
            row[rng.gen_range(0..ns)] = 1.0;
        } else {
            row = raw.iter().map(|p| p / total).collect();
            let residue = 1.0 - row.iter().sum::<f64>();
            let k = (0..ns).max_by(|a, b| row[*a].total_cmp(&row[*b])).unwrap();
            row[k] += residue;
        }
        t.extend(row);
    }
    let r = (0..ns * na * ns).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let phi = (0..ns).map(|_| rng.gen_range(-10.0..10.0)).collect();
    (FiniteMdp::new(ns, na, t, r, 0.9).unwrap(), phi)
}

fn c5_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tol = 1e-10;
    let (mut states, mut ties, mut differ) = (0, 0, 0);
    for _ in 0..100 {
        let (mdp, phi) = random_mdp(&mut rng);
        let plain = value_iteration(&mdp, tol).unwrap();
        let shaped = value_iteration(&mdp.clone().with_potential(phi).unwrap(), tol).unwrap();
        for s in 0..mdp.n_states {
            let row = &plain.q[s * mdp.n_actions..(s + 1) * mdp.n_actions];
            let best = row[plain.policy[s]];
            if row.iter().enumerate().any(|(a, q)| a != plain.policy[s] && best - q < 1e3 * tol) {
                ties += 1;
                continue;
            }
            states += 1;
            differ += usize::from(plain.policy[s] != shaped.policy[s]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        differ == 0 && secs < 60.0,
        format!("100 MDPs, {states} states compared ({ties} near-ties skipped), {differ} differ, {secs:.2}s"),
    )
}

fn reduced_setup(profile: &str) -> LearningSetup<f64> {
    LearningSetup::new(FieldConfig::reduced(), profile).unwrap()
}

/// Trains against att_e on the reduced field with default settings and
/// returns the 100-round greedy evaluation. Memoized across criteria.
fn trained_eval(profile: &str, seed: u64) -> Arc<EvalReport<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(String, u64), Arc<EvalReport<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(&(profile.to_string(), seed)) {
        return r.clone();
    }
    let setup = reduced_setup(profile);
    let opp = OpponentSpec::att_e();
    let cfg = TrainConfig { seed, eval_every: 0, ..TrainConfig::default() };
    let out = train(&setup, &opp, &cfg).unwrap();
    let report = Arc::new(evaluate(&out.snapshot, &setup, &opp, 100, seed, true).unwrap());
    cache.lock().unwrap().insert((profile.to_string(), seed), report.clone());
    report
}

fn c6_btrs() -> Outcome {
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..5 {
        let sr = trained_eval("SR", seed).mean_score;
        let btrs = trained_eval("BTRS", seed).mean_score;
        wins += usize::from(btrs > sr);
        rows.push(format!("seed {seed} SR {sr:.2} BTRS {btrs:.2}"));
    }
    outcome(wins >= 3, format!("BTRS higher in {wins}/5 seeds; {}", rows.join(", ")))
}

fn hold(profile: &str) -> (f64, f64) {
    let logs: Vec<EpisodeLog<f64>> = (0..5).flat_map(|s| trained_eval(profile, s).logs.clone()).collect();
    let map = action_heatmap(&logs, Role::Defender).unwrap();
    (map.hold_fraction(), map.stop_hold_fraction())
}

fn c7_eff() -> Outcome {
    let (sr, sr_stop) = hold("SR");
    let (eff, eff_stop) = hold("EFF");
    let ratio = eff / sr;
    outcome(
        ratio >= 2.0,
        format!(
            "hold fraction SR {sr:.3} EFF {eff:.3} (x{ratio:.2}); stopped-hold SR {sr_stop:.3} EFF {eff_stop:.3} (x{:.2})",
            eff_stop / sr_stop
        ),
    )
}

fn c8_regimes() -> Outcome {
    let setup = reduced_setup("BTRS");
    let mut bad = Vec::new();
    for seed in 0..4 {
        let opp = if seed % 2 == 0 { OpponentSpec::att_e() } else { OpponentSpec::att_h(&setup.field) };
        let cfg = TrainConfig { seed, episodes: 300, eval_every: 100, eval_episodes: 10, ..TrainConfig::default() };
        let a = train(&setup, &opp, &cfg).unwrap();
        let b = run_interleaved(&setup, std::slice::from_ref(&opp), &cfg).unwrap();
        let stage = CurriculumStage { opponent: opp.clone(), episodes: 300 };
        let c = run_curriculum(&setup, &[stage], &TrainConfig { episodes: 0, ..cfg }).unwrap();
        let text = a.snapshot.to_text();
        if text != b.snapshot.to_text() || text != c.snapshot.to_text() || a.curve != b.curve || a.curve != c.curve {
            bad.push(seed);
        }
    }
    outcome(bad.is_empty(), format!("4 seeds x 3 regimes, snapshot text and curve compared, differing seeds: {bad:?}"))
}

type StepTrace = (ctf_core::rewards::RewardBreakdown<f64>, Vec<GameEvent<f64>>);

fn greedy(policy: &PolicySnapshot<f64>, features: &ctf_core::FeatureVector, flag: bool) -> Action {
    let s = policy.discretizer.discretize(features, flag).unwrap();
    Action::from_index(policy.q.argmax(s), policy.meta.heading_sectors)
}

fn scripted(seed: u64, t: usize) -> Action {
    Action::new((seed as usize + t) % 4, (t / 3 + seed as usize) % 8)
}

fn remote(client: &mut Client, seed: u64, policy: Option<&PolicySnapshot<f64>>) -> Vec<StepTrace> {
    let ProtocolMessage::Observation(first) = client.reset(seed).unwrap() else { panic!("reset failed") };
    let mut obs = first.observation;
    let mut trace = Vec::new();
    for t in 0.. {
        let a = policy.map_or_else(|| scripted(seed, t), |p| greedy(p, &obs.features, obs.flag_grabbed));
        match client.step(a).unwrap() {
            ProtocolMessage::Reward(r) => {
                trace.push((r.breakdown, r.events));
                obs = r.observation;
            }
            ProtocolMessage::Done(d) => {
                trace.push((d.breakdown, d.events));
                return trace;
            }
            other => panic!("unexpected reply {other:?}"),
        }
    }
    unreachable!()
}

fn local(config: &EnvConfig<f64>, seed: u64, policy: Option<&PolicySnapshot<f64>>) -> Vec<StepTrace> {
    let mut env = CtfEnv::new(config.clone()).unwrap();
    env.reset(seed).unwrap();
    let mut trace = Vec::new();
    for t in 0.. {
        let flag = env.state().unwrap().flag_grabbed;
        let a = policy.map_or_else(|| scripted(seed, t), |p| greedy(p, &env.observe().unwrap(), flag));
        let out = env.step(a).unwrap();
        trace.push((out.reward, out.events));
        if out.terminal.is_some() {
            return trace;
        }
    }
    unreachable!()
}

fn c9_wire() -> Outcome {
    let field = FieldConfig::reduced();
    let setup = reduced_setup("BTRS");
    let cfg = TrainConfig { seed: 9, episodes: 400, eval_every: 0, eval_episodes: 1, ..TrainConfig::default() };
    let policy = train(&setup, &OpponentSpec::att_e(), &cfg).unwrap().snapshot;

    let configs: Vec<EnvConfig<f64>> = ["SR", "BTRS", "BTRS+EFF", "2BTRS"]
        .iter()
        .zip(["att_e", "att_h", "att_h", "att_e"])
        .map(|(p, o)| EnvConfig {
            opponent: OpponentSpec::named(o, &field).unwrap(),
            reward: RewardSpec::named(p, &field).unwrap(),
            field: field.clone(),
        })
        .collect();
    let server = Server::bind("127.0.0.1:0", configs[0].clone()).unwrap().spawn().unwrap();
    let mut clients: Vec<Client> = configs
        .iter()
        .map(|c| {
            let mut client = Client::connect(server.local_addr()).unwrap();
            client.hello().unwrap();
            assert!(matches!(client.configure(c.clone()).unwrap(), ProtocolMessage::Info(_)));
            client
        })
        .collect();

    let (mut bad, mut steps, mut points) = (Vec::new(), 0, 0i64);
    for ep in 0..100u64 {
        let k = (ep % 4) as usize;
        let pol = (ep % 2 == 1).then_some(&policy);
        let wire = remote(&mut clients[k], ep, pol);
        let mem = local(&configs[k], ep, pol);
        let score = |t: &[StepTrace], role| -> i64 { t.iter().flat_map(|s| &s.1).map(|e| e.kind.points_for(role)).sum() };
        let same = wire == mem
            && [Role::Attacker, Role::Defender].iter().all(|r| score(&wire, *r) == score(&mem, *r));
        if !same {
            bad.push(ep);
        }
        steps += wire.len();
        points += score(&wire, Role::Defender).abs();
    }
    for c in &mut clients {
        let _ = c.bye();
    }
    let _ = server.shutdown();
    outcome(
        bad.is_empty(),
        format!("100 episodes, {steps} steps over 4 sessions ({points} absolute defender points), differing: {bad:?}"),
    )
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c10_reproducible() -> Outcome {
    let cfg = parse_config(
        r#"
seeds = [3, 11]
profile = "BTRS+EFF"
regime = "interleaved"
opponents = ["att_e", "att_h"]
log_episodes = 4
[field]
preset = "reduced"
[train]
episodes = 150
eval_every = 50
eval_episodes = 5
"#,
    )
    .unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    cmd_train(&cfg, &a).unwrap();
    cmd_train(&cfg, &b).unwrap();
    let (ta, tb) = (tree(&a), tree(&b));
    let identical = ta == tb;
    let summary = cmd_replay(&[a.clone()], None).unwrap();
    outcome(
        identical && summary.mismatches() == 0 && summary.reports.len() == 16,
        format!(
            "{} files identical: {identical}; replayed {} logs, {} mismatches",
            ta.len(),
            summary.reports.len(),
            summary.mismatches()
        ),
    )
}

fn c11_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fields = [FieldConfig::<f64>::full(), FieldConfig::reduced()];
    let h = 1e-5;
    let (mut checked, mut skipped, mut bad) = (0, 0, 0);
    let mut worst = 0.0f64;
    while checked < 1000 {
        let f = &fields[rng.gen_range(0..2)];
        let cfg = AttHConfig {
            goal_gain: rng.gen_range(0.1..5.0),
            defender_repulsion_gain: rng.gen_range(0.0..100.0),
            defender_repulsion_radius: rng.gen_range(1.0..40.0),
            boundary_repulsion_gain: rng.gen_range(0.0..50.0),
            boundary_repulsion_radius: rng.gen_range(1.0..20.0),
            cruise_speed_index: 2,
        };
        let mut s = reset_round(f, rng.gen()).unwrap();
        s.flag_grabbed = rng.gen_bool(0.5);
        s.defender.position = anywhere(&mut rng, f);
        let p = if rng.gen_bool(0.3) { near(&mut rng, s.defender.position, cfg.defender_repulsion_radius) } else { anywhere(&mut rng, f) };
        // The goal cone and the defender barrier are not differentiable at
        // their centers, and a barrier's second derivative jumps at its
        // radius; stay clear of those points by more than the step.
        let goal = ctf_core::agents::att_h_goal(&s, f);
        let edge_gaps = f.edge_distances(p).map(|e| (e - cfg.boundary_repulsion_radius).abs());
        let near_kink = (p - goal).norm() < 1e-3
            || (p - s.defender.position).norm() < 1e-3
            || ((p - s.defender.position).norm() - cfg.defender_repulsion_radius).abs() < 1e-3
            || edge_gaps.iter().any(|g| *g < 1e-3);
        if near_kink {
            skipped += 1;
            continue;
        }
        let (_, g) = composite_potential(p, &s, &cfg, f);
        let v = |q: Vec2<f64>| composite_potential(q, &s, &cfg, f).0;
        let fx = (v(p + Vec2::new(h, 0.0)) - v(p - Vec2::new(h, 0.0))) / (2.0 * h);
        let fy = (v(p + Vec2::new(0.0, h)) - v(p - Vec2::new(0.0, h))) / (2.0 * h);
        let rel = Vec2::new(fx - g.x, fy - g.y).norm() / g.norm().max(1.0);
        worst = worst.max(rel);
        bad += usize::from(rel > 1e-6);
        checked += 1;
    }
    outcome(
        bad == 0,
        format!("{checked} points ({skipped} near kinks skipped), {bad} above 1e-6, worst relative error {worst:.2e}"),
    )
}
