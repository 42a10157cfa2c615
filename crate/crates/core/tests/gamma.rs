mod common;

use common::gamma_deviation;

#[test]
fn relative_degree_two_scalar() {
    let dev = gamma_deviation(2, 1, 1000, 1);
    assert!(dev <= 1e-10, "{dev:e}");
}

#[test]
fn relative_degree_two_vector() {
    let dev = gamma_deviation(2, 3, 1000, 2);
    assert!(dev <= 1e-10, "{dev:e}");
}

#[test]
fn relative_degree_three_scalar() {
    let dev = gamma_deviation(3, 1, 1000, 3);
    assert!(dev <= 1e-10, "{dev:e}");
}

#[test]
fn relative_degree_three_vector() {
    let dev = gamma_deviation(3, 3, 1000, 4);
    assert!(dev <= 1e-10, "{dev:e}");
}
