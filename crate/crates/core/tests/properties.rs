use std::f64::consts::TAU;

use echo_core::bloch::{propagate, simulate_sequence};
use echo_core::ensemble::sample_detunings;
use echo_core::experiment::fit_sinusoid;
use echo_core::pathways::{enumerate_pathways, wrap_phase, Relaxation};
use echo_core::qubit::{apply_memory_channel, expected_visibility, make_timebin, postselected_fidelity};
use echo_core::{EnsembleSpec, GridScheme, Pulse, PulseSequence};
use proptest::prelude::*;

fn sequence(gaps: &[f64], areas: &[f64], phases: &[f64], duration: f64) -> PulseSequence {
    let mut t = 0.0;
    let pulses = gaps
        .iter()
        .zip(areas)
        .zip(phases)
        .enumerate()
        .map(|(k, ((&gap, &area), &phase))| {
            t += gap;
            Pulse::with_area(format!("P{}", k + 1), t, duration, area, phase).unwrap()
        })
        .collect();
    PulseSequence::new(pulses).unwrap()
}

fn textbook_times(t: [f64; 3]) -> Vec<f64> {
    let [t1, t2, t3] = t;
    vec![2.0 * t2 - t1, 2.0 * t3 - t2, 2.0 * t3 - t1, t3 + t2 - t1]
}

fn contains(set: &[f64], x: f64) -> bool {
    set.iter().any(|&y| (y - x).abs() < 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn detuning_weights_are_normalised(
        n_atoms in 1usize..3000,
        linewidth in 0.01f64..5.0,
        quadrature in any::<bool>(),
    ) {
        let grid_scheme = if quadrature { GridScheme::GaussQuadrature } else { GridScheme::UniformTruncated };
        let n_atoms = if quadrature { n_atoms.min(200) } else { n_atoms };
        let spec = EnsembleSpec { n_atoms, linewidth_fwhm: linewidth, grid_scheme, ..EnsembleSpec::default() };
        let grid = sample_detunings(&spec).unwrap();
        prop_assert!((grid.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(grid.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn propagation_without_relaxation_keeps_the_norm(
        gaps in prop::collection::vec(20.0f64..400.0, 1..8),
        areas in prop::collection::vec(0.0f64..10.0, 8),
        phases in prop::collection::vec(-TAU..TAU, 8),
        detuning in -5.0f64..5.0,
    ) {
        let seq = sequence(&gaps, &areas, &phases, 15.0);
        let s = propagate(&seq, detuning, f64::INFINITY, f64::INFINITY);
        prop_assert!((s.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn common_phase_leaves_intensity_unchanged(
        areas in prop::collection::vec(0.1f64..2.0, 3),
        phases in prop::collection::vec(-3.0f64..3.0, 3),
        delta in -3.0f64..3.0,
    ) {
        let seq = sequence(&[0.0, 100.0, 150.0], &areas, &phases, 2.0);
        let spec = EnsembleSpec { n_atoms: 501, ..EnsembleSpec::default() };
        let a = simulate_sequence(&seq, &spec, (260.0, 420.0), 0.2).unwrap();
        let b = simulate_sequence(&seq.with_phase_offset(delta), &spec, (260.0, 420.0), 0.2).unwrap();
        let peak = (0..a.len()).map(|i| a.intensity(i)).fold(0.0, f64::max);
        for i in 0..a.len() {
            prop_assert!((a.intensity(i) - b.intensity(i)).abs() <= 1e-9 * peak.max(1e-300));
        }
    }

    #[test]
    fn three_pulse_echoes_include_the_textbook_set(
        g1 in 20.0f64..500.0,
        g2 in 20.0f64..500.0,
        areas in prop::collection::vec(0.2f64..2.5, 3),
    ) {
        let seq = sequence(&[0.0, g1, g2], &areas, &[0.0; 3], 1.0);
        let centers: Vec<f64> = seq.pulses().iter().map(Pulse::center).collect();
        let t = [centers[0], centers[1], centers[2]];
        let last_end = seq.pulses()[2].t_end();
        let found: Vec<f64> = enumerate_pathways(&seq, Relaxation::NONE).unwrap().iter().map(|p| p.echo_time).collect();
        let textbook: Vec<f64> = textbook_times(t).into_iter().filter(|&x| x > last_end + 1e-9).collect();
        for &x in &textbook {
            prop_assert!(contains(&found, x), "missing echo at {x}");
        }
        // The only extra rephasing is the doubly refocused 2t3 - 2t2 + t1.
        let mut allowed = textbook.clone();
        allowed.push(2.0 * t[2] - 2.0 * t[1] + t[0]);
        for &x in &found {
            prop_assert!(contains(&allowed, x), "unexpected echo at {x}");
        }
    }

    #[test]
    fn phase_shift_moves_each_pathway_by_its_order_jump(
        gaps in prop::collection::vec(30.0f64..300.0, 3..5),
        areas in prop::collection::vec(0.2f64..2.0, 5),
        phases in prop::collection::vec(-3.0f64..3.0, 5),
        which in 0usize..5,
        delta in -3.0f64..3.0,
    ) {
        let k = which % gaps.len();
        let base = sequence(&gaps, &areas, &phases, 1.0);
        let mut shifted_phases = phases.clone();
        shifted_phases[k] += delta;
        let shifted = sequence(&gaps, &areas, &shifted_phases, 1.0);
        let a = enumerate_pathways(&base, Relaxation::NONE).unwrap();
        let b = enumerate_pathways(&shifted, Relaxation::NONE).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(&b) {
            prop_assert_eq!(&pa.orders, &pb.orders);
            let expected = pa.phase + pa.order_jump(k) as f64 * delta;
            prop_assert!(wrap_phase(pb.phase - expected).abs() < 1e-9);
            prop_assert_eq!(pa.intrinsic_phase, pb.intrinsic_phase);
        }
    }

    #[test]
    fn longer_gaps_never_raise_pathway_amplitude(
        gaps in prop::collection::vec(30.0f64..300.0, 3..5),
        areas in prop::collection::vec(0.2f64..2.0, 5),
        which in 1usize..5,
        extra in 1.0f64..2000.0,
    ) {
        let k = 1 + (which - 1) % (gaps.len() - 1);
        let relax = Relaxation { t1: 5000.0, t2: 800.0 };
        let base = enumerate_pathways(&sequence(&gaps, &areas, &[0.0; 5], 1.0), relax).unwrap();
        let mut longer_gaps = gaps.clone();
        longer_gaps[k] += extra;
        let longer = enumerate_pathways(&sequence(&longer_gaps, &areas, &[0.0; 5], 1.0), relax).unwrap();
        for p in &longer {
            prop_assert!(p.amplitude >= 0.0);
            if let Some(q) = base.iter().find(|q| q.orders == p.orders) {
                prop_assert!(p.amplitude <= q.amplitude * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn reversed_sequences_reflect_echo_times(
        gaps in prop::collection::vec(30.0f64..300.0, 3..5),
        areas in prop::collection::vec(0.2f64..2.0, 5),
    ) {
        let seq = sequence(&gaps, &areas, &[0.0; 5], 1.0);
        let centers: Vec<f64> = seq.pulses().iter().map(Pulse::center).collect();
        let span = centers[0] + centers[centers.len() - 1];
        // Mirror image about the mid-point of the first and last pulses.
        let mirrored: Vec<f64> = centers.iter().rev().map(|t| span - t).collect();
        let mut rev_gaps = vec![mirrored[0] - 0.5];
        rev_gaps.extend(mirrored.windows(2).map(|w| w[1] - w[0]));
        let rev_areas: Vec<f64> = areas[..centers.len()].iter().rev().copied().collect();
        let reversed = sequence(&rev_gaps, &rev_areas, &vec![0.0; centers.len()], 1.0);

        for (forward, times, other) in [(&seq, &centers, &mirrored), (&reversed, &mirrored, &centers)] {
            for p in enumerate_pathways(forward, Relaxation::NONE).unwrap() {
                let c = &p.time_coefficients;
                let on_self: f64 = c.iter().zip(times.iter()).map(|(&c, t)| c as f64 * t).sum();
                prop_assert!((on_self - p.echo_time).abs() < 1e-6);
                // The same integer law on the mirrored pulse train lands on
                // the reflected time.
                let on_mirror: f64 = c.iter().zip(other.iter().rev()).map(|(&c, t)| c as f64 * t).sum();
                prop_assert!((on_mirror - (span - p.echo_time)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn visibility_law_is_symmetric(r in 1e-6f64..1e6) {
        prop_assert!((expected_visibility(r) - expected_visibility(1.0 / r)).abs() < 1e-12);
        prop_assert!(expected_visibility(r) <= 1.0 + 1e-15);
    }

    #[test]
    fn fidelity_does_not_depend_on_storage_time(
        ratio in 0.01f64..100.0,
        phi in -3.0f64..3.0,
        dt in 1.0f64..500.0,
        t2 in 100.0f64..1e5,
    ) {
        let q = make_timebin(ratio, phi, dt).unwrap();
        let f0 = postselected_fidelity(&q, &apply_memory_channel(&q, 0.0, t2).unwrap()).unwrap();
        let f1 = postselected_fidelity(&q, &apply_memory_channel(&q, t2, t2).unwrap()).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-12);
    }

    #[test]
    fn retrieval_falls_with_storage_time_and_bin_spacing(
        ratio in 0.01f64..100.0,
        dt in 1.0f64..500.0,
        t_d1 in 0.0f64..5000.0,
        extra in 1.0f64..1000.0,
        t2 in 1000.0f64..1e4,
    ) {
        let q = make_timebin(ratio, 0.4, dt).unwrap();
        let base = apply_memory_channel(&q, t_d1, t2).unwrap();
        let later = apply_memory_channel(&q, t_d1 + extra, t2).unwrap();
        let wider = apply_memory_channel(&make_timebin(ratio, 0.4, dt + extra).unwrap(), t_d1, t2).unwrap();
        prop_assert!(later.retrieval_probability < base.retrieval_probability);
        prop_assert!(wider.retrieval_probability < base.retrieval_probability);
        prop_assert_eq!(base.qubit.phi, 0.4);
    }

    #[test]
    fn sinusoid_fit_recovers_parameters(
        mean in 0.1f64..10.0,
        visibility in 0.0f64..1.0,
        offset in -3.0f64..3.0,
        n in 8usize..40,
    ) {
        let phases: Vec<f64> = (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect();
        let values: Vec<f64> = phases.iter().map(|p| mean * (1.0 + visibility * (p + offset).cos())).collect();
        let fit = fit_sinusoid(&phases, &values).unwrap();
        prop_assert!((fit.mean - mean).abs() < 1e-9 * mean);
        prop_assert!((fit.visibility - visibility).abs() < 1e-9);
        if visibility > 1e-6 {
            prop_assert!(wrap_phase(fit.phase_offset - offset).abs() < 1e-6);
        }
    }
}
