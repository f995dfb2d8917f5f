// temporary probe
use diva_core::functionals::FunctionalSpec;
use diva_core::models::parse_fcidump;
use diva_core::rdm::frobenius_distance;
use diva_core::solver::{diva_run, DivaConfig, DivaMode};

fn main() {
    let text = std::fs::read_to_string("data/h2_like_r14.fcidump").unwrap();
    let model = parse_fcidump(&text).unwrap();
    let tight = DivaConfig { energy_tol: 1e-10, rdm_tol: 1e-6, max_iters: 3000, ..DivaConfig::default() };
    let mono = diva_run(&model, &FunctionalSpec::mueller(), &tight, None).unwrap();
    let multi = diva_run(&model, &FunctionalSpec::mueller(), &DivaConfig { mode: DivaMode::Multi, max_iters: 60, ..DivaConfig::default() }, None).unwrap();
    println!("mono {:.9}({}) multi {:.9}({}) dE {:.2e} dG {:.2e}",
        mono.report.total, mono.iterations, multi.report.total, multi.iterations,
        (mono.report.total-multi.report.total).abs(),
        frobenius_distance(&mono.gamma, &multi.gamma).unwrap());
}
