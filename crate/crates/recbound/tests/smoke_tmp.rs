use std::time::Instant;

use recbound::abstraction::abstract_triples;
use recbound::cfg;
use recbound::constraints::generate;
use recbound::expansion::expand;
use recbound::frontend::parse;
use recbound::poly::OpKind;
use recbound::positivstellensatz::{solve_system, Goal, SystemOutcome};
use recbound::rat::rat;
use recbound::template::build_templates;

fn run(name: &str, op: OpKind, degree: usize, k: usize) {
    let t0 = Instant::now();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");
    let path = if name.starts_with('/') {
        name.to_string()
    } else {
        format!("{}/{}.rec", dir, name)
    };
    let src = std::fs::read_to_string(path).unwrap();
    let program = parse(&src).unwrap();
    let cfg = cfg::build(&program);
    let templates = build_templates(&program, &cfg, &op, degree, None).unwrap();
    let ex = expand(&program, &cfg, &templates);
    let ts = generate(&cfg, &templates, &ex);
    let abs = abstract_triples(&program, &ts, &op);
    let t1 = Instant::now();
    eprintln!(
        "{}: {} triples -> {} abstract, {} template vars, prep {:?}",
        name,
        ts.len(),
        abs.len(),
        templates.num_vars(),
        t1 - t0
    );
    let gsum: usize = abs.iter().map(|a| a.gamma.len()).sum();
    eprintln!("{}: total gamma members {}", name, gsum);
    let out = solve_system(&abs, templates.num_vars(), k, &Goal::Feasibility);
    let t2 = Instant::now();
    match out {
        SystemOutcome::Solved(_) => eprintln!("{}: SOLVED in {:?}", name, t2 - t1),
        SystemOutcome::Infeasible => {
            eprintln!("{}: INFEASIBLE in {:?}", name, t2 - t1)
        }
    }
}

#[test]
fn smoke_all() {
    let which = std::env::var("SMOKE").unwrap_or_default();
    match which.as_str() {
        "mergesort" => run("mergesort", OpKind::Log, 2, 2),
        "karatsuba" => run("karatsuba", OpKind::Exp(rat(8, 5)), 1, 2),
        "strassen" => run("strassen", OpKind::Exp(rat(19, 10)), 2, 2),
        "strassen2" => run("strassen", OpKind::Exp(rat(2, 1)), 2, 2),
        "closest_pair" => run("closest_pair", OpKind::Log, 2, 2),
        "randwalk" => run("randwalk", OpKind::Log, 1, 1),
        "nestedloop" => run("nestedloop", OpKind::Log, 2, 2),
        other if other.starts_with('/') => run(other, OpKind::Log, 2, 2),
        _ => {
            run("randwalk", OpKind::Log, 1, 1);
            run("nestedloop", OpKind::Log, 2, 2);
        }
    }
}
