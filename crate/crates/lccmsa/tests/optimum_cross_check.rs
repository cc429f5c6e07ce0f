//! Dual-route validation of the stored instance optima: the exact
//! face-enumeration values must agree with an independent multi-start
//! projected-gradient refinement.

use lccmsa::problems::{constrained_synthetic, refine_optimum, ObjectiveKind};

#[test]
fn stored_optima_match_projected_gradient_refinement() {
    let cases = [
        (ObjectiveKind::Sphere, 2, 1),
        (ObjectiveKind::Sphere, 3, 2),
        (ObjectiveKind::LinearSlope, 2, 1),
        (ObjectiveKind::LinearSlope, 3, 2),
        (ObjectiveKind::DifferentPowers, 2, 1),
        (ObjectiveKind::DifferentPowers, 2, 2),
    ];
    for (kind, dim, m) in cases {
        for seed in [5u64, 17] {
            let instance = constrained_synthetic(kind, dim, m, seed);
            let refined = refine_optimum(&instance, 16, 4000, 0xC0FFEE)
                .expect("bounded builtin instance");
            // The gradient route can never genuinely beat the exact value,
            // and must come within the target resolution of it.
            assert!(
                refined >= instance.f_opt - 1e-9,
                "{} d={dim} m={m} seed={seed}: refinement {refined} beats stored {}",
                kind.name(),
                instance.f_opt
            );
            assert!(
                refined - instance.f_opt <= 1e-8,
                "{} d={dim} m={m} seed={seed}: refinement {refined} vs stored {} gap {:.3e}",
                kind.name(),
                instance.f_opt,
                refined - instance.f_opt
            );
        }
    }
}
