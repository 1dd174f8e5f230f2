use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use chr_core::analysis::{
    check_confluence, check_operational_equivalence, complete, complexity_bound, find_redundant_rules, verify_ranking,
    CompletionError, Confluence, Equivalence, RankingSpec, RankingVerdict,
};
use chr_core::corpus::{self, Expected, Fixture, RunMode, ANALYSIS_PROGRAMS, ANALYSIS_RANKINGS, FIXTURES};
use chr_core::engine::{run_refined, EngineError, Status};
use chr_core::state::GoalError;
use chr_core::strategy::Execution;
use chr_core::{parse_goal, parse_program, Config, Program, StrategyRegistry, Term};

use crate::{Analysis, Common, CorpusCommand, Mode, RunArgs};

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const LIMIT: u8 = 2;
const RUNTIME: u8 = 3;
const INPUT: u8 = 4;

fn input_error(e: anyhow::Error) -> u8 {
    eprintln!("error: {e:#}");
    INPUT
}

fn load_program(spec: &str) -> Result<(Program, Option<&'static Fixture>)> {
    if let Some(name) = spec.strip_prefix("corpus:") {
        let src = corpus::program_source(name).ok_or_else(|| anyhow!("no bundled program named `{name}`"))?;
        return Ok((parse_program(src)?, corpus::fixture(name)));
    }
    let src = fs::read_to_string(spec).with_context(|| format!("cannot read {spec}"))?;
    Ok((parse_program(&src).with_context(|| format!("in {spec}"))?, None))
}

fn load_ranking(spec: &str) -> Result<RankingSpec> {
    let src = match spec.strip_prefix("corpus:") {
        Some(name) => corpus::fixture(name)
            .and_then(|f| f.ranking)
            .or_else(|| ANALYSIS_RANKINGS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s))
            .ok_or_else(|| anyhow!("no bundled ranking named `{name}`"))?
            .to_string(),
        None => fs::read_to_string(spec).with_context(|| format!("cannot read {spec}"))?,
    };
    Ok(RankingSpec::parse(&src)?)
}

fn load_goal(text: &str) -> Result<Vec<Term>> {
    let src = match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?,
        None => text.to_string(),
    };
    parse_goal(src.trim()).context("in goal")
}

fn config(common: &Common) -> Result<Config> {
    let seed = match std::env::var("CHR_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("CHR_SEED={v} is not a seed"))?,
        Err(_) => common.seed,
    };
    let mut c = Config::default().with_seed(seed);
    if let Some(s) = common.steps {
        c.step_limit = s;
    }
    if let Some(b) = common.bound {
        c.joinability_bound = b;
    }
    if let Some(g) = common.grid {
        c.sample_grid = g;
    }
    c.validate()?;
    Ok(c)
}

/// Strategy name and the configuration adjusted for it.
fn strategy_for(mode: &Mode, mut cfg: Config) -> Result<(String, Config)> {
    let name = if let Some(w) = mode.parallel {
        cfg.parallel_width = w;
        "parallel".to_string()
    } else if mode.abstract_ {
        "abstract".to_string()
    } else if mode.exhaustive {
        "exhaustive".to_string()
    } else if let Some(s) = &mode.strategy {
        s.clone()
    } else {
        StrategyRegistry::DEFAULT.to_string()
    };
    cfg.validate()?;
    Ok((name, cfg))
}

fn engine_exit(e: &EngineError) -> u8 {
    match e {
        EngineError::Goal(GoalError::NotAConstraint(_)) => INPUT,
        _ => RUNTIME,
    }
}

fn execution_exit(ex: &Execution) -> u8 {
    if !ex.complete || ex.outcomes.is_empty() {
        return LIMIT;
    }
    if ex.outcomes.iter().all(|o| o.status == Status::Failed) {
        return NEGATIVE;
    }
    OK
}

pub fn run(args: RunArgs) -> u8 {
    let prepared = (|| -> Result<_> {
        let (program, fixture) = load_program(&args.program)?;
        let goal = match (&args.goal, fixture) {
            (Some(g), _) => load_goal(g)?,
            (None, Some(f)) => f.goal_terms(),
            (None, None) => bail!("a goal is required"),
        };
        let mut cfg = config(&args.common)?;
        if let (Some(f), None) = (fixture, args.common.steps) {
            cfg = f.config(&cfg);
        }
        cfg.trace = args.trace;
        let (name, cfg) = strategy_for(&args.mode, cfg)?;
        Ok((program, goal, name, cfg))
    })();
    let (program, goal, name, cfg) = match prepared {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    let registry = StrategyRegistry::default();
    let Some(strategy) = registry.get(&name) else {
        let known: Vec<_> = registry.names().collect();
        return input_error(anyhow!("unknown strategy `{name}` (known: {})", known.join(", ")));
    };
    match strategy.run(&program, &goal, &cfg) {
        Ok(ex) => {
            if let Some(t) = &ex.trace {
                print!("{t}");
            }
            if ex.outcomes.len() == 1 {
                print!("{}", ex.outcomes[0].state.answer());
            } else {
                for (i, o) in ex.outcomes.iter().enumerate() {
                    println!("NORMAL FORM {}:", i + 1);
                    print!("{}", o.state.answer());
                }
            }
            if let Some(s) = &ex.stats {
                println!("{s}");
            }
            let status = ex.outcomes.first().map(|o| o.status.to_string()).unwrap_or_else(|| "none".into());
            eprintln!("strategy: {name}; status: {status}; steps: {}; seed: {}", ex.steps, cfg.seed);
            execution_exit(&ex)
        }
        Err(e) => {
            eprintln!("error: {e}");
            engine_exit(&e)
        }
    }
}

pub fn analyze(a: Analysis) -> u8 {
    match analyze_inner(a) {
        Ok(code) => code,
        Err(e) => input_error(e),
    }
}

fn analyze_inner(a: Analysis) -> Result<u8> {
    Ok(match a {
        Analysis::Confluence { program, common } => {
            let (p, _) = load_program(&program)?;
            let report = check_confluence(&p, &config(&common)?);
            print!("{report}");
            match report.verdict {
                Confluence::Confluent => OK,
                Confluence::NotConfluent => NEGATIVE,
                Confluence::Unknown => LIMIT,
            }
        }
        Analysis::Complete { program, ranking, iterations, common } => {
            let (p, _) = load_program(&program)?;
            let order = load_ranking(&ranking)?;
            let mut cfg = config(&common)?;
            if let Some(n) = iterations {
                cfg.completion_iterations = n;
            }
            match complete(&p, &order, &cfg) {
                Ok(c) => {
                    println!("ITERATIONS: {}", c.iterations);
                    for r in &c.added {
                        println!("ADDED: {r}");
                    }
                    print!("{}", c.program);
                    println!("SEED: {}", cfg.seed);
                    OK
                }
                Err(e) => {
                    println!("COMPLETION FAILED: {e}");
                    println!("SEED: {}", cfg.seed);
                    match e {
                        CompletionError::UnorientablePair { .. } => NEGATIVE,
                        _ => LIMIT,
                    }
                }
            }
        }
        Analysis::Equiv { first, second, common } => {
            let (p1, _) = load_program(&first)?;
            let (p2, _) = load_program(&second)?;
            let cfg = config(&common)?;
            match check_operational_equivalence(&p1, &p2, &cfg) {
                Ok(report) => {
                    print!("{report}");
                    match report.verdict {
                        Equivalence::Equivalent => OK,
                        Equivalence::NotEquivalent(_) => NEGATIVE,
                        Equivalence::Unknown(_) => LIMIT,
                    }
                }
                Err(e) => {
                    println!("EQUIVALENT: unknown ({e})");
                    println!("SEED: {}", cfg.seed);
                    LIMIT
                }
            }
        }
        Analysis::Redundant { program, common } => {
            let (p, _) = load_program(&program)?;
            let cfg = config(&common)?;
            let verdict = check_confluence(&p, &cfg).verdict;
            if verdict != Confluence::Confluent {
                println!("REDUNDANT: unknown (the program is not known to be confluent)");
                println!("SEED: {}", cfg.seed);
                return Ok(LIMIT);
            }
            let found = find_redundant_rules(&p, &cfg);
            if found.is_empty() {
                println!("REDUNDANT: none");
            }
            for r in found {
                println!("REDUNDANT: {} {}", p.rules[r].label(), p.rules[r]);
            }
            println!("SEED: {}", cfg.seed);
            OK
        }
        Analysis::Ranking { program, ranking, samples, common } => {
            let (p, _) = load_program(&program)?;
            let rk = load_ranking(&ranking)?;
            let cfg = config(&common)?;
            let report = verify_ranking(&p, &rk, samples, cfg.seed);
            print!("{report}");
            println!("SEED: {}", cfg.seed);
            match report.verdict {
                RankingVerdict::Proved => OK,
                RankingVerdict::Refuted(_) => NEGATIVE,
                RankingVerdict::ProbabilisticPass { .. } => LIMIT,
            }
        }
        Analysis::Complexity { program, measure, common } => {
            let (p, _) = load_program(&program)?;
            let cfg = config(&common)?.with_trace(true);
            let mut code = OK;
            let d = match measure {
                Some(g) => {
                    let goal = load_goal(&g)?;
                    let r = run_refined(&p, &goal, &cfg).map_err(|e| anyhow!("measuring run failed: {e}"))?;
                    if r.status == Status::StepLimit {
                        code = LIMIT;
                    }
                    r.trace.map(|t| t.derivation_length())
                }
                None => None,
            };
            print!("{}", complexity_bound(&p, d));
            code
        }
    })
}

fn one_line(s: &str) -> String {
    s.lines().collect::<Vec<_>>().join(", ")
}

pub fn corpus(c: CorpusCommand) -> u8 {
    match c {
        CorpusCommand::List => {
            println!("{:<18} {:<10} {:<10} DESCRIPTION", "NAME", "MODE", "CONFLUENT");
            for f in FIXTURES {
                let mode = match f.mode {
                    RunMode::ToNormalForm => "normal".to_string(),
                    RunMode::Steps(n) => format!("steps={n}"),
                };
                println!("{:<18} {:<10} {:<10} {}", f.name, mode, if f.confluent { "yes" } else { "no" }, f.description);
            }
            for (name, _) in ANALYSIS_PROGRAMS {
                println!("{name:<18} {:<10} {:<10} analysis input", "-", "-");
            }
            OK
        }
        CorpusCommand::RunAll { mode, common } => {
            let prepared = config(&common).and_then(|cfg| strategy_for(&mode, cfg));
            let (name, cfg) = match prepared {
                Ok(p) => p,
                Err(e) => return input_error(e),
            };
            let registry = StrategyRegistry::default();
            let Some(strategy) = registry.get(&name) else {
                return input_error(anyhow!("unknown strategy `{name}`"));
            };
            let mut passed = 0;
            for f in FIXTURES {
                let out = f.check(strategy, &cfg);
                let expected = match f.expected {
                    Expected::Answer(a) => one_line(a),
                    Expected::Contains(lines) => format!("contains {}", lines.join(", ")),
                    Expected::Error(m) => format!("error: {m}"),
                };
                println!(
                    "{:<18} {} expected=[{}] actual=[{}]",
                    f.name,
                    if out.passed { "PASS" } else { "FAIL" },
                    expected,
                    one_line(&out.actual)
                );
                passed += usize::from(out.passed);
            }
            println!("PASSED {passed}/{} (strategy {name}, seed {})", FIXTURES.len(), cfg.seed);
            if passed == FIXTURES.len() {
                OK
            } else {
                NEGATIVE
            }
        }
    }
}
