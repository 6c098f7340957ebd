use aoa_pla::experiments::{
    emit_plot, plot_spec, reproduce, run, ExperimentConfig, FigureId, LineSpec, PlotSpec,
    ResultTable,
};
use aoa_pla::Error;

fn quick(figure: FigureId, seed: u64, dir: &std::path::Path) -> ExperimentConfig {
    let c = ExperimentConfig::new(figure, seed, dir);
    match figure {
        FigureId::Fig2 => c
            .with_override("trials", "10")
            .unwrap()
            .with_override("snapshots", "200")
            .unwrap()
            .with_override("snr_db", "[0,15]")
            .unwrap(),
        FigureId::Fig3 | FigureId::Fig5 | FigureId::Fig7 => {
            c.with_override("trials", "200").unwrap()
        }
        _ => c,
    }
}

#[test]
fn metadata_reruns_the_table() {
    let dir = tempfile::tempdir().unwrap();
    for f in FigureId::ALL {
        let c = quick(f, 5, dir.path());
        let first = run(&c).unwrap().table;
        let parsed = ResultTable::from_csv(&first.to_csv()).unwrap();
        let again = ExperimentConfig::from_table(&parsed, dir.path()).unwrap();
        assert_eq!(run(&again).unwrap().table.to_csv(), first.to_csv(), "{f}");
    }
}

#[test]
fn seeds_change_monte_carlo_columns_only() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&quick(FigureId::Fig5, 1, dir.path())).unwrap().table;
    let b = run(&quick(FigureId::Fig5, 2, dir.path())).unwrap().table;
    assert_eq!(
        a.column_values("zeta_theory").unwrap(),
        b.column_values("zeta_theory").unwrap()
    );
    assert_ne!(
        a.column_values("zeta_sim").unwrap(),
        b.column_values("zeta_sim").unwrap()
    );
}

#[test]
fn tables_are_rectangular_with_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let expect: [(FigureId, &[&str]); 4] = [
        (
            FigureId::Fig2,
            &[
                "snr_db",
                "num_rx_antennas",
                "mean_est_alice_rad",
                "mean_est_eve_rad",
            ],
        ),
        (FigureId::Fig3, &["phi0_rad", "zeta_theory", "zeta_sim"]),
        (
            FigureId::Fig6,
            &["theta_rad", "theta_hat_e_rad", "zeta_theory"],
        ),
        (
            FigureId::Fig7,
            &[
                "num_attacker_antennas",
                "misaligned",
                "zeta_theory",
                "zeta_sim",
            ],
        ),
    ];
    for (f, cols) in expect {
        let t = run(&quick(f, 0, dir.path())).unwrap().table;
        for c in cols {
            t.column_index(c).unwrap();
        }
        assert!(t.rows().iter().all(|r| r.len() == t.columns().len()));
        assert!(t.metadata_value("version").is_some());
    }
}

#[test]
fn noiseless_fig2_is_grid_exact() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick(FigureId::Fig2, 0, dir.path())
        .with_override("noiseless", "1")
        .unwrap();
    let r = run(&c).unwrap();
    assert!(r.check("noiseless_grid_exact").unwrap().passed);
}

#[test]
fn every_default_figure_except_fig2_passes_its_checks() {
    let dir = tempfile::tempdir().unwrap();
    for f in FigureId::ALL.into_iter().filter(|f| *f != FigureId::Fig2) {
        let r = run(&ExperimentConfig::new(f, 2024, dir.path())).unwrap();
        assert!(!r.checks.is_empty());
        for c in &r.checks {
            assert!(c.passed, "{f}: {c}");
        }
    }
}

#[test]
fn reproduce_writes_named_files() {
    let dir = tempfile::tempdir().unwrap();
    let rep = reproduce(&quick(FigureId::Fig3dDiff, 9, dir.path())).unwrap();
    assert_eq!(rep.csv_path, dir.path().join("fig3d_diff__9.csv"));
    let svg = std::fs::read_to_string(&rep.svg_path).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("zeta_theory"));
    let csv = std::fs::read_to_string(&rep.csv_path).unwrap();
    assert!(csv.starts_with("# figure=fig3d_diff\n# seed=9\n"));
}

#[test]
fn plots_for_every_figure_and_bad_columns() {
    let dir = tempfile::tempdir().unwrap();
    let t = run(&quick(FigureId::Fig7, 0, dir.path())).unwrap().table;
    let path = dir.path().join("p.svg");
    emit_plot(&t, &plot_spec(FigureId::Fig7), &path).unwrap();
    let bad = PlotSpec::Line(LineSpec {
        title: "x".into(),
        x: "num_attacker_antennas".into(),
        ys: vec!["zeta_missing".into()],
        series_by: vec![],
        log_y: false,
    });
    assert_eq!(
        emit_plot(&t, &bad, &path),
        Err(Error::UnknownColumn("zeta_missing".into()))
    );
}
