//! Every defense against the attack it targets, with the attack accuracy
//! and the target model's accuracy it leaves behind.
//!
//! Usage: defenses [SEED]

use gpia::attacks::AttackId;
use gpia::defenses::{evaluate_defense, DefenseMethod, DefenseSpec, NOISE_SWEEP, TRUNCATION_SWEEP};
use gpia::fixture::PlantedFixture;

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let fx = PlantedFixture::new(seed)?;
    let mut cases: Vec<(AttackId, DefenseMethod)> = Vec::new();
    for b in NOISE_SWEEP {
        cases.push((AttackId::A2, DefenseMethod::NoisyPosterior { b }));
        cases.push((AttackId::A1, DefenseMethod::NoisyEmbedding { b, target_layers: None }));
    }
    cases.extend(TRUNCATION_SWEEP.map(|r| (AttackId::A1, DefenseMethod::Truncation { r })));
    cases.push((AttackId::A2, DefenseMethod::dp_from_scale(1.0)));
    cases.push((AttackId::A2, DefenseMethod::TopkPosterior { k: 1 }));
    cases.push((AttackId::A2, DefenseMethod::LabelOnly {}));

    println!("{:<16} {:>6} {:<6} {:>6} {:>7}", "defense", "param", "attack", "AC", "target");
    for (id, method) in cases {
        let spec = DefenseSpec { seed, ..DefenseSpec::new(method) };
        let r = evaluate_defense(&spec, &fx.spec(id), &fx.knowledge(id.access()), &fx.target, &fx.cfg, seed)?;
        let param = r.param.map(|p| p.to_string()).unwrap_or_default();
        println!("{:<16} {:>6} {:<6} {:>6.3} {:>7.3}", r.method, param, r.attack_id, r.attack_acc, r.target_acc);
    }
    Ok(())
}
