//! Whole-network sweeps at the reference load: these run the energy model
//! across the supply range the optimizer and the parity study care about.

use mesogate::constants::PhysicalConstants;
use mesogate::efficiency::{parity_efficiency, EfficiencyContext, ParityParams};
use mesogate::gate::XorParams;

fn vt() -> f64 {
    PhysicalConstants::default().thermal_voltage()
}

#[test]
fn parity_efficiency_finite_and_positive_across_supplies() {
    let ctx = EfficiencyContext::new(XorParams::with_supply(15.0 * vt()));
    let uniform = ParityParams::uniform();
    let mut last_eta = f64::INFINITY;
    for i in 0..23 {
        let vd_vt = 4.0 + 11.0 * i as f64 / 22.0;
        let point = parity_efficiency(&ctx, vd_vt * vt(), &uniform).unwrap();
        assert!(
            point.eta.is_finite() && point.eta > 0.0,
            "vd = {vd_vt} VT: eta = {}",
            point.eta
        );
        assert!(point.mutual_information > 0.9 && point.mutual_information <= 1.0);
        // energy grows with supply, so efficiency falls
        assert!(point.eta < last_eta, "vd = {vd_vt} VT");
        last_eta = point.eta;
    }
}

#[test]
fn reference_operating_point_is_consistent() {
    // the asymmetric operating point the optimizer literature singles out;
    // the absolute ratio depends on level-map constants, so only internal
    // consistency and a broad order-of-magnitude band are asserted
    let ctx = EfficiencyContext::new(XorParams::with_supply(15.0 * vt()));
    let point = ctx
        .information_energy_ratio(5.16 * vt(), 0.39, 1.0)
        .unwrap();
    println!(
        "reference point: eta = {:.4e} bits/kT (MI {:.4} bits, E {:.2} kT)",
        point.eta, point.mutual_information, point.average_energy_kt
    );
    assert!(point.eta > 0.0);
    assert!((point.eta - point.mutual_information / point.average_energy_kt).abs() < 1e-12 * point.eta);
    // MI of a one-sided input is the binary entropy of the active leg,
    // minus a ~1e-7 undecided-band correction at this supply
    let h = -(0.39f64 * 0.39f64.log2() + 0.61 * 0.61f64.log2());
    assert!((point.mutual_information - h).abs() < 1e-6);
    assert!(point.eta > 1e-4 && point.eta < 1e-1, "eta = {}", point.eta);
}
