//! Runs CCM and BPM in both directions on the three benchmark systems and
//! prints the skill at each library size.
//!
//! cargo run --release -p bpm-core --example benchmarks

use bpm_core::{run_pairwise, simulate, Case, DetectionConfig, SystemSpec};

fn main() -> bpm_core::Result<()> {
    let cases = [
        (Case::Case1, (1.0, 0.0)),
        (Case::Case2, (0.3, 0.5)),
        (Case::Case3, (0.2, 0.2)),
    ];
    for (case, betas) in cases {
        let data = simulate(&SystemSpec::new(case, betas))?;
        println!("== {case:?} betas={betas:?}");
        for cfg in [DetectionConfig::ccm(), DetectionConfig::bpm()] {
            let res = run_pairwise(&data, "X", "Y", Some("theta"), &cfg)?;
            for dir in res.directions() {
                let c = &dir.curve;
                let skills: Vec<String> = c.mean_skill.iter().map(|s| format!("{s:.3}")).collect();
                println!(
                    "{} {}->{}: [{}] converged={}",
                    c.method,
                    c.cause,
                    c.effect,
                    skills.join(" "),
                    dir.verdict.converged
                );
            }
        }
    }
    Ok(())
}
