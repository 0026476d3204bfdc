use sixfilm_core::mms::{observed_orders, self_convergence, temporal_study, ManufacturedFilm};
use sixfilm_core::*;

fn dts(t_end: f64, levels: i32) -> Vec<f64> {
    (0..levels).map(|k| t_end / 20.0 / 2f64.powi(k)).collect()
}

#[test]
fn manufactured_solution_temporal_orders() {
    let film = ManufacturedFilm::default();
    let t_end = film.period / 2.0;
    let params = validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap();
    let be = observed_orders(
        &temporal_study(&film, &params, Scheme::Be, 32, t_end, &dts(t_end, 5)).unwrap(),
    );
    let bdf2 = observed_orders(
        &temporal_study(&film, &params, Scheme::Bdf2, 32, t_end, &dts(t_end, 8)).unwrap(),
    );
    assert!((be.last().unwrap() - 1.0).abs() < 0.1, "{be:?}");
    assert!((bdf2.last().unwrap() - 2.0).abs() < 0.1, "{bdf2:?}");
}

#[test]
fn viscoelastic_backward_euler_is_first_order() {
    let film = ManufacturedFilm::default();
    let t_end = film.period / 2.0;
    let params = validate_params(RawParams::new(12.0, 12.0, 3.0)).unwrap();
    let be = observed_orders(
        &temporal_study(&film, &params, Scheme::Be, 32, t_end, &dts(t_end, 4)).unwrap(),
    );
    assert!(be.iter().all(|o| (o - 1.0).abs() < 0.05), "{be:?}");
}

#[test]
fn self_convergence_under_halving() {
    let cfg = RunConfig {
        grid: PeriodicGrid::new(16).unwrap(),
        params: validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap(),
        dt0: 1e-7,
        t_end: 2e-6,
        scheme: Scheme::Bdf2,
        output_every: 1,
        initial: InitialSpec::Expr(Expr::parse("1 + 0.3*sin(2*pi*x)").unwrap()),
    };
    let pts = self_convergence(&cfg, &[1e-7, 5e-8, 2.5e-8, 1.25e-8, 6.25e-9, 3.125e-9]).unwrap();
    let orders = observed_orders(&pts);
    // the stiffest retained mode has sigma*dt ~ 0.1 only at the finer levels;
    // coarser pairs are pre-asymptotic, so only the tail is checked
    let last = *orders.last().unwrap();
    assert!((last - 2.0).abs() < 0.1, "{orders:?} {pts:?}");
    assert!(orders.windows(2).all(|w| w[1] > w[0] - 0.05), "{orders:?}");
}
