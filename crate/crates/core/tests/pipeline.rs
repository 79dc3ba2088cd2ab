use charkin_core::charfn::{convert_ordering, StateSpec};
use charkin_core::classical::{classical_operator, harmonic_flow, ClassicalHamiltonian};
use charkin_core::evolution::{
    evolve, rhs_for_hamiltonian, EvolveConfig, MonitorTolerances, RhsMethod,
};
use charkin_core::fock::{density_to_charfn, von_neumann_evolve, FockDensity};
use charkin_core::hamiltonian::PolyHamiltonian;
use charkin_core::io::{Dump, DumpTag};
use charkin_core::wigner::to_wigner;
use charkin_core::{CharField, GridSpec, Ordering, PhaseGrid, C64};

fn grid(g: usize, l: f64) -> PhaseGrid {
    PhaseGrid::new(&GridSpec::uniform(1, g, l, 1.0, 1.0)).unwrap()
}

fn state(grid: &PhaseGrid, spec: &StateSpec, ordering: Ordering) -> (FockDensity, CharField) {
    let rho = FockDensity::from_state(spec, 40).unwrap();
    let c = density_to_charfn(&rho, grid, ordering).unwrap().field;
    (rho, c)
}

fn config(dt: f64, t_final: f64) -> EvolveConfig {
    EvolveConfig {
        dt,
        t_final,
        cadence: 10,
        tolerances: MonitorTolerances::default(),
    }
}

#[test]
fn kerr_evolution_tracks_exact_unitary_dynamics() {
    let g = grid(32, 8.0);
    let spec = StateSpec::Coherent {
        alpha: C64::new(1.0, 0.0),
    };
    let (rho, c0) = state(&g, &spec, Ordering::Symmetric);
    let h = PolyHamiltonian::kerr(0.2);
    let rhs =
        rhs_for_hamiltonian(RhsMethod::Distributional, &h, &g, Ordering::Symmetric, 12).unwrap();
    let t = 0.2;
    let traj = evolve(&c0, rhs.as_ref(), &config(2e-4, t)).unwrap();
    let exact = density_to_charfn(
        &von_neumann_evolve(&rho, &h.to_fock(40).unwrap(), t, 1.0).unwrap(),
        &g,
        Ordering::Symmetric,
    )
    .unwrap()
    .field;
    let err = traj.last().field.relative_l2(&exact);
    assert!(err < 1e-4, "relative L2 {err:.3e}");
}

#[test]
fn quarter_period_matches_rotated_coherent_state() {
    let g = grid(32, 10.0);
    let (_, c0) = state(
        &g,
        &StateSpec::Coherent {
            alpha: C64::new(1.0, 0.5),
        },
        Ordering::Symmetric,
    );
    let h = PolyHamiltonian::harmonic(1, 1.0, 1.0);
    let rhs =
        rhs_for_hamiltonian(RhsMethod::Distributional, &h, &g, Ordering::Symmetric, 12).unwrap();
    let quarter = std::f64::consts::FRAC_PI_2;
    let traj = evolve(&c0, rhs.as_ref(), &config(quarter / 500.0, quarter)).unwrap();
    let rotated = state(
        &g,
        &StateSpec::Coherent {
            alpha: C64::new(1.0, 0.5) * C64::new(0.0, -1.0),
        },
        Ordering::Symmetric,
    )
    .1;
    assert!(traj.last().field.relative_l2(&rotated) < 1e-5);
}

#[test]
fn classical_harmonic_run_is_a_rigid_rotation() {
    let g = grid(32, 8.0);
    let sigma = 0.6;
    let gauss = move |z: &[f64]| {
        C64::from_polar(
            (-(z[0] * z[0] + z[1] * z[1]) * sigma).exp(),
            0.8 * z[0] - 0.3 * z[1],
        )
    };
    let c0 = CharField::from_fn(&g, Ordering::Classical, gauss).unwrap();
    let rhs = classical_operator(
        &ClassicalHamiltonian::harmonic(1, 1.0),
        &g,
        RhsMethod::Distributional,
        12,
    )
    .unwrap();
    let t = 1.3;
    let traj = evolve(&c0, rhs.as_ref(), &config(t / 400.0, t)).unwrap();
    let exact = harmonic_flow(&g, Ordering::Classical, 1.0, t, gauss).unwrap();
    assert!(traj.last().field.relative_l2(&exact) < 1e-5);
}

#[test]
fn antinormal_rhs_agrees_with_symmetric_after_conversion() {
    let g = grid(32, 8.0);
    let spec = StateSpec::Coherent {
        alpha: C64::new(0.5, 0.2),
    };
    let h = PolyHamiltonian::kerr(0.3);
    let rhs = |ordering| {
        let (_, c0) = state(&g, &spec, ordering);
        let r = rhs_for_hamiltonian(RhsMethod::Distributional, &h, &g, ordering, 12).unwrap();
        convert_ordering(&r.eval(&c0).unwrap(), Ordering::Symmetric).unwrap()
    };
    let sym = rhs(Ordering::Symmetric);
    let anti = rhs(Ordering::Antinormal);
    // e^{|ξ|²} amplifies the antinormal field's truncation error far out
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..g.len() {
        if g.xi_norm_sqr(&g.point(i)) < 4.0 {
            num += (anti.data()[i] - sym.data()[i]).norm_sqr();
            den += sym.data()[i].norm_sqr();
        }
    }
    let err = (num / den).sqrt();
    assert!(err < 1e-4, "symmetric vs antinormal {err:.3e}");
}

#[test]
fn evolved_snapshots_survive_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(16, 5.0);
    let (_, c0) = state(&g, &StateSpec::Thermal { nbar: 0.4 }, Ordering::Normal);
    let rhs = rhs_for_hamiltonian(
        RhsMethod::Distributional,
        &PolyHamiltonian::kerr(0.1),
        &g,
        Ordering::Normal,
        12,
    )
    .unwrap();
    let traj = evolve(&c0, rhs.as_ref(), &config(1e-3, 0.02)).unwrap();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let path = dir.path().join(format!("snap_{k}.bin"));
        Dump::from_charfield(&snap.field).save(&path).unwrap();
        let back = Dump::load(&path).unwrap().into_charfield().unwrap();
        assert_eq!(back.ordering(), Ordering::Normal);
        assert_eq!(back.data(), snap.field.data());
    }
    let w = to_wigner(&convert_ordering(&traj.last().field, Ordering::Symmetric).unwrap()).unwrap();
    let path = dir.path().join("w.bin");
    Dump::from_wigner(&w).save(&path).unwrap();
    let dump = Dump::load(&path).unwrap();
    assert_eq!(dump.tag, DumpTag::Wigner);
    let back = dump.into_wigner().unwrap();
    assert_eq!(back.max_abs_diff(&w), 0.0);
    assert!((back.mass() - 1.0).abs() < 1e-8);
}
