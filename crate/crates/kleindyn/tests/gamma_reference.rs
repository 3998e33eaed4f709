//! Cross-checks `log_gamma` against a frozen high-precision reference table
//! (1000 points, |z| ≤ 50, at least 0.1 from every pole, values computed
//! with 40-digit arithmetic).

use kleindyn::gamma::log_gamma;
use num_complex::Complex64;

fn reference_rows() -> Vec<(Complex64, Complex64)> {
    let raw = include_str!("data/loggamma_reference.csv");
    raw.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut it = line.split(',').map(|s| s.trim().parse::<f64>().unwrap());
            let z = Complex64::new(it.next().unwrap(), it.next().unwrap());
            let lg = Complex64::new(it.next().unwrap(), it.next().unwrap());
            (z, lg)
        })
        .collect()
}

#[test]
fn log_gamma_matches_reference_table_to_1e12() {
    let rows = reference_rows();
    assert_eq!(rows.len(), 1000);
    let mut worst = 0.0f64;
    let mut worst_z = Complex64::new(0.0, 0.0);
    for (z, expected) in rows {
        let got = log_gamma(z).unwrap();
        // Absolute error on the log scale bounds the relative error of Γ.
        let err = (got - expected).norm();
        if err > worst {
            worst = err;
            worst_z = z;
        }
    }
    assert!(
        worst <= 1e-12,
        "worst |Δlog_gamma| = {worst:.3e} at z = {worst_z}"
    );
}

#[test]
fn log_gamma_recurrence_holds_across_the_table() {
    // log Γ(z+1) − log Γ(z) − log z must vanish modulo 2πi.
    for (z, _) in reference_rows().into_iter().step_by(7) {
        let lhs = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap() - z.ln();
        let wrapped = (lhs.im / (2.0 * std::f64::consts::PI)).round();
        let residual = Complex64::new(lhs.re, lhs.im - wrapped * 2.0 * std::f64::consts::PI);
        assert!(
            residual.norm() <= 1e-11,
            "recurrence residual {residual:e} at z = {z}"
        );
    }
}
